macro_rules! example {
    ($m:ident, $file:literal) => {
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(phantom_matrix, "phantom_matrix.rs");
example!(art_feasibility, "art_feasibility.rs");
example!(tv_objective, "tv_objective.rs");
example!(superiorized_tv, "superiorized_tv.rs");
example!(dvh_acceptance, "dvh_acceptance.rs");
example!(compare_arms, "compare_arms.rs");

#[test]
fn phantom_matrix_example() {
    let stats = phantom_matrix::run_example().unwrap();
    assert_eq!((stats.rows, stats.cols), (4096, 224));
    assert_eq!(stats.zero_rows, 0);
    assert!(stats.min_column_nnz > 0);
}

#[test]
fn art_feasibility_example() {
    let d = art_feasibility::run_example().unwrap();
    assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-9));
}

#[test]
fn tv_objective_example() {
    let (tv, after) = tv_objective::run_example().unwrap();
    assert_eq!(tv, 8.0);
    assert!(after < tv);
}

#[test]
fn superiorized_tv_example() {
    for (_, basic, sup) in superiorized_tv::run_example().unwrap() {
        assert!(sup < basic);
    }
}

#[test]
fn dvh_acceptance_example() {
    assert!(dvh_acceptance::run_example().unwrap());
}

#[test]
fn compare_arms_example() {
    assert_eq!(compare_arms::run_example().unwrap(), vec![true, true]);
}
