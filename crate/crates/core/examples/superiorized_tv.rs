// Plain ART vs. its TV-superiorized version on synthetic feasible cases:
// a seeded piecewise-constant plan defines a dose band that is known to be
// reachable, and both arms run from zero until they are ε-compatible.
//
// ```bash
// cargo run --release --example superiorized_tv
// ```

use std::error::Error;
use std::sync::Arc;

use tvsup::experiment::RunConfig;
use tvsup::solver::{make_feasible_case, WitnessOptions};
use tvsup::{build_dose_matrix, generate_phantom, run_basic, run_superiorized};

pub fn run_example() -> Result<Vec<(u64, f64, f64)>, Box<dyn Error>> {
    let config = RunConfig::default_desk();
    let phantom = generate_phantom(&config.effective_phantom()?)?;
    let matrix = Arc::new(build_dose_matrix(&phantom)?);
    let params = config.solver.clone();

    let mut rows = Vec::new();
    println!("seed  sweeps(basic/sup)  tv_basic   tv_sup    ratio");
    for seed in 0..5u64 {
        let (sys, _witness) =
            make_feasible_case(&phantom, Arc::clone(&matrix), 1.0, seed, &WitnessOptions::default())?;
        let x0 = vec![0.0; sys.num_cols()];
        let basic = run_basic(&x0, &sys, &params)?;
        let sup = run_superiorized(&x0, &sys, &params)?;
        let (tb, ts) = (basic.last().tv, sup.last().tv);
        println!(
            "{seed:>4}  {:>6}/{:<6}       {tb:>9.3} {ts:>9.3}  {:.3}",
            basic.last().sweep,
            sup.last().sweep,
            ts / tb
        );
        rows.push((seed, tb, ts));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
