// The two-arm experiment from both starting plans: superiorized ART run to
// its ε-output at sweep K, and plain ART stopped at K, scored against the
// same acceptance criteria.
//
// ```bash
// cargo run --release --example compare_arms
// ```

use std::error::Error;

use tvsup::experiment::{Experiment, InitSpec, RunConfig};

pub fn run_example() -> Result<Vec<bool>, Box<dyn Error>> {
    let mut held = Vec::new();
    for init in [InitSpec::Zeros, InitSpec::Constant(10.0)] {
        let mut config = RunConfig::default_desk();
        config.init = init.clone();
        let exp = Experiment::prepare(config)?;
        let sup = exp.run_arm(true, None)?;
        let k = sup.trace.last().sweep;
        let capped = exp.run_arm(false, Some(k))?;

        println!("init {init:?}: superiorized epsilon-output at sweep {k}");
        for (s, b) in sup.verdicts.iter().zip(&capped.verdicts) {
            println!(
                "  {:<58} sup {:>6.2}{}  basic@K {:>6.2}{}",
                s.name,
                s.measured,
                if s.pass { " " } else { "!" },
                b.measured,
                if b.pass { " " } else { "!" }
            );
        }
        println!(
            "  TV {:.2} (superiorized) vs {:.2} (basic@K)",
            sup.trace.last().tv,
            capped.trace.last().tv
        );
        held.push(sup.all_pass() && !capped.all_pass());
    }
    Ok(held)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
