// ART for interval constraints: a hand-sized system first, then a
// phantom-sized feasible case where the distance to the witness plan
// shrinks every sweep.
//
// ```bash
// cargo run --release --example art_feasibility
// ```

use std::error::Error;
use std::sync::Arc;

use tvsup::constraints::epsilon_output;
use tvsup::experiment::RunConfig;
use tvsup::solver::{art_sweep, basic_iterates, make_feasible_case, WitnessOptions};
use tvsup::{build_dose_matrix, generate_phantom, proximity, ConstraintSystem, DoseInfluenceMatrix};

pub fn run_example() -> Result<Vec<f64>, Box<dyn Error>> {
    // two voxels, two beamlets
    let a = DoseInfluenceMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 0.5]])?;
    let sys = ConstraintSystem::from_bounds(a, vec![3.0, 1.0], vec![4.0, 2.0])?;
    let out = epsilon_output(basic_iterates(vec![0.0, 0.0], &sys, 1.0), &sys, 1e-6, 50)?;
    println!(
        "small system: x = [{:.4}, {:.4}] after {} sweeps (prox {:.2e})",
        out.iterate[0], out.iterate[1], out.index, out.proximity
    );

    let config = RunConfig::default_desk();
    let phantom = generate_phantom(&config.effective_phantom()?)?;
    let matrix = Arc::new(build_dose_matrix(&phantom)?);
    let (sys, witness) = make_feasible_case(&phantom, matrix, 1.0, 7, &WitnessOptions::default())?;

    let mut x = vec![0.0; sys.num_cols()];
    let mut distances = Vec::new();
    println!("sweep  prox_gy_rms  |x - x*|");
    for k in 0..=10 {
        let d = x.iter().zip(&witness).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        println!("{k:>5}  {:>11.4}  {d:>8.3}", proximity(&x, &sys)?.value);
        distances.push(d);
        art_sweep(&mut x, &sys, 1.0);
    }
    Ok(distances)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
