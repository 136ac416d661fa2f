use std::sync::Arc;

use proptest::prelude::*;
use tvsup::constraints::proximity;
use tvsup::experiment::RunConfig;
use tvsup::phantom::{trace_beamlet, GridSpec};
use tvsup::raytrace::{trace_ray, GridGeometry, Ray};
use tvsup::solver::{art_row_step, draw_witness, make_feasible_case, WitnessOptions};
use tvsup::{
    build_dose_matrix, compute_dvh, generate_phantom, run_basic, run_superiorized, tv_value, ConstraintSystem,
    DoseInfluenceMatrix, IntensityMap, SolverParams, TvMode,
};


fn map_strategy() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (1usize..6, 1usize..12).prop_flat_map(|(f, b)| (Just(f), Just(b), prop::collection::vec(0.0..50.0f64, f * b)))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn tv_is_shift_invariant_and_homogeneous((f, b, x) in map_strategy(), c in 0.0..20.0f64, s in 0.0..5.0f64) {
        for mode in [TvMode::PerField1d, TvMode::Full2d] {
            let tv = tv_value(&IntensityMap::new(&x, f, b).unwrap(), mode);
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
            prop_assert!(close(tv_value(&IntensityMap::new(&shifted, f, b).unwrap(), mode), tv, 1e-12));
            prop_assert!(close(tv_value(&IntensityMap::new(&scaled, f, b).unwrap(), mode), s * tv, 1e-12));
            prop_assert!(tv >= 0.0);
        }
    }

    #[test]
    fn proximity_scales_with_the_system(
        rows in prop::collection::vec(prop::collection::vec(0.0..3.0f64, 3), 1..6),
        x in prop::collection::vec(0.0..5.0f64, 3),
        s in 0.1..10.0f64,
    ) {
        let n = rows.len();
        let lower: Vec<f64> = (0..n).map(|j| j as f64).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + 2.0).collect();
        let a = DoseInfluenceMatrix::from_dense(&rows).unwrap();
        let sys = ConstraintSystem::from_bounds(a.clone(), lower.clone(), upper.clone()).unwrap();
        let scaled = ConstraintSystem::from_bounds(
            a,
            lower.iter().map(|v| v * s).collect(),
            upper.iter().map(|v| v * s).collect(),
        ).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * s).collect();
        let p = proximity(&x, &sys).unwrap();
        let q = proximity(&xs, &scaled).unwrap();
        prop_assert!(close(q.value, s * p.value, 1e-12));
        prop_assert_eq!(p.is_feasible(), p.value == 0.0);
    }

    #[test]
    fn one_row_step_lands_in_the_slab(
        row in prop::collection::vec(0.0..3.0f64, 4),
        x in prop::collection::vec(0.0..5.0f64, 4),
        lo in 0.0..10.0f64,
        width in 0.0..5.0f64,
    ) {
        prop_assume!(row.iter().any(|&v| v > 0.0));
        let a = DoseInfluenceMatrix::from_dense(&[row]).unwrap();
        let sys = ConstraintSystem::from_bounds(a, vec![lo], vec![lo + width]).unwrap();
        let mut y = x.clone();
        art_row_step(&mut y, &sys, 0, 1.0).unwrap();
        let p = sys.matrix().row_dot(0, &y);
        prop_assert!(p >= lo - 1e-9 && p <= lo + width + 1e-9);
    }

    #[test]
    fn dvh_is_invariant_under_dose_scaling(
        dose in prop::collection::vec(0.0..90.0f64, 1..200),
        s in 0.5..4.0f64,
    ) {
        let mask: Vec<usize> = (0..dose.len()).collect();
        let scaled: Vec<f64> = dose.iter().map(|d| d * s).collect();
        let a = compute_dvh("S", &dose, &mask, 64).unwrap();
        let b = compute_dvh("S", &scaled, &mask, 64).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert!(close(q.0, s * p.0, 1e-12));
        }
        prop_assert_eq!(a.points[0].1, 100.0);
        prop_assert!(a.points.windows(2).all(|w| w[1].1 <= w[0].1));
    }

    #[test]
    fn ray_lengths_add_up_to_the_chord(
        ox in -40.0..80.0f64, oy in -40.0..80.0f64, angle in 0.0..std::f64::consts::TAU,
    ) {
        let grid = GridGeometry { nx: 12, ny: 9, voxel_size_mm: 3.0 };
        let ray = Ray::new([ox, oy], [angle.cos(), angle.sin()]);
        let crossings = trace_ray(&grid, &ray);
        match grid.clip(&ray) {
            None => prop_assert!(crossings.is_empty()),
            Some((t0, t1)) => {
                let total: f64 = crossings.iter().map(|c| c.length_mm).sum();
                prop_assert!((total - (t1 - t0)).abs() < 1e-9);
                prop_assert!(crossings.iter().all(|c| c.voxel < 12 * 9 && c.length_mm >= 0.0));
                prop_assert!(crossings.windows(2).all(|w| w[1].depth_mm >= w[0].depth_mm));
            }
        }
    }

    #[test]
    fn witnesses_are_nonnegative_and_piecewise_constant(seed in any::<u64>()) {
        let opts = WitnessOptions::default();
        let w = draw_witness(7, 32, &opts, seed);
        prop_assert_eq!(w.len(), 7 * 32);
        prop_assert!(w.iter().all(|&v| (0.0..=opts.max_level).contains(&v)));
        for row in w.chunks(32) {
            let jumps = row.windows(2).filter(|p| p[0] != p[1]).count();
            prop_assert!(jumps < opts.max_segments);
        }
        prop_assert_eq!(draw_witness(7, 32, &opts, seed), w);
    }
}

#[test]
fn attenuation_decays_per_voxel() {
    let grid = GridSpec { nx: 10, ny: 10, voxel_size_mm: 2.0 };
    let ray = Ray::new([-5.0, 9.0], [1.0, 0.0]);
    let col = trace_beamlet(&grid, &[ray], 0.01);
    assert_eq!(col.len(), 10);
    for w in col.windows(2) {
        assert!((w[1].1 / w[0].1 - (-0.02f64).exp()).abs() < 1e-12);
    }
    assert!((col[0].1 - 2.0 * (-0.01f64).exp()).abs() < 1e-12);
}

fn desk_parts() -> (tvsup::Phantom, Arc<DoseInfluenceMatrix>, SolverParams) {
    let config = RunConfig::default_desk();
    let phantom = generate_phantom(&config.effective_phantom().unwrap()).unwrap();
    let matrix = Arc::new(build_dose_matrix(&phantom).unwrap());
    (phantom, matrix, config.solver)
}

#[test]
fn matrix_build_is_deterministic() {
    let (phantom, matrix, _) = desk_parts();
    assert_eq!(build_dose_matrix(&phantom).unwrap(), *matrix);
}

#[test]
fn different_seeds_give_different_feasible_cases() {
    let (phantom, matrix, _) = desk_parts();
    let opts = WitnessOptions::default();
    let (a, wa) = make_feasible_case(&phantom, Arc::clone(&matrix), 1.0, 1, &opts).unwrap();
    let (b, wb) = make_feasible_case(&phantom, Arc::clone(&matrix), 1.0, 2, &opts).unwrap();
    assert_ne!(wa, wb);
    assert_ne!(a.lower(), b.lower());
    assert_eq!(proximity(&wa, &a).unwrap().value, 0.0);
    assert_eq!(proximity(&wb, &b).unwrap().value, 0.0);
    assert!(proximity(&wa, &b).unwrap().value > 0.0);
}

#[test]
fn superiorized_reaches_a_looser_epsilon_within_three_times_the_sweeps() {
    let (phantom, matrix, params) = desk_parts();
    let params = SolverParams { epsilon: 0.05, ..params };
    for seed in 0..3 {
        let (sys, _) = make_feasible_case(&phantom, Arc::clone(&matrix), 1.0, seed, &WitnessOptions::default()).unwrap();
        let x0 = vec![0.0; sys.num_cols()];
        let basic = run_basic(&x0, &sys, &params).unwrap();
        let k = basic.outcome.sweep().unwrap();
        let looser = SolverParams { epsilon: 1.1 * params.epsilon, max_sweeps: 3 * k.max(1), ..params.clone() };
        let sup = run_superiorized(&x0, &sys, &looser).unwrap();
        assert!(sup.outcome.is_reached(), "seed {seed}: basic needed {k} sweeps");
    }
}

#[test]
fn single_beamlet_fields_make_perturbations_inert() {
    let a = DoseInfluenceMatrix::from_dense(&[vec![1.0, 0.5, 0.0], vec![0.2, 1.0, 1.0], vec![0.0, 0.3, 2.0]]).unwrap();
    let sys = ConstraintSystem::from_bounds(a, vec![2.0, 1.0, 3.0], vec![2.5, 4.0, 3.5])
        .unwrap()
        .with_layout(3, 1)
        .unwrap();
    let params = SolverParams { epsilon: 1e-6, ..SolverParams::default() };
    for x0 in [vec![0.0; 3], vec![4.0; 3]] {
        let basic = run_basic(&x0, &sys, &params).unwrap();
        let sup = run_superiorized(&x0, &sys, &params).unwrap();
        assert_eq!(sup.final_x, basic.final_x);
        assert_eq!(sup.outcome, basic.outcome);
        assert!(sup.records.iter().all(|r| r.tv == 0.0));
    }
}
