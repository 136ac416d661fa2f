// Runs the superiorized solver on the desk phantom and scores the plan:
// acceptance verdicts plus a few points of each structure's cumulative DVH.
//
// ```bash
// cargo run --release --example dvh_acceptance
// ```

use std::error::Error;

use tvsup::experiment::{Experiment, RunConfig};
use tvsup::{check_acceptance, compute_dvh};

pub fn run_example() -> Result<bool, Box<dyn Error>> {
    let exp = Experiment::prepare(RunConfig::default_desk())?;
    let arm = exp.run_arm(true, None)?;
    println!("epsilon-output at sweep {}", arm.trace.last().sweep);

    for s in exp.phantom.structures() {
        let dvh = compute_dvh(&s.name, &arm.dose, &s.voxels, 256)?;
        let at = |pct: f64| dvh.points.iter().rev().find(|p| p.1 >= pct).map_or(0.0, |p| p.0);
        println!(
            "{:<8} D100 {:>6.2}  D50 {:>6.2}  D2 {:>6.2} Gy",
            s.name,
            dvh.full_coverage_dose(),
            at(50.0),
            at(2.0)
        );
    }

    let verdicts = check_acceptance(&arm.dose, |n| exp.phantom.mask(n), &exp.config.criteria)?;
    for v in &verdicts {
        println!("{:<4} {:<60} {:.2}", if v.pass { "ok" } else { "FAIL" }, v.name, v.measured);
    }
    Ok(verdicts.iter().all(|v| v.pass))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
