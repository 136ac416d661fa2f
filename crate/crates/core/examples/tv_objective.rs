// Total variation of beamlet maps in both modes, and the normalized
// descent direction used to perturb iterates.
//
// ```bash
// cargo run --example tv_objective
// ```

use std::error::Error;

use tvsup::objective::{nonascending_direction, tv_smoothed_value, DEFAULT_DELTA};
use tvsup::{tv_value, IntensityMap, TvMode};

pub fn run_example() -> Result<(f64, f64), Box<dyn Error>> {
    // 3 fields x 4 beamlets with one hot beamlet
    let x = [0.0, 0.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let map = IntensityMap::new(&x, 3, 4)?;
    let tv1 = tv_value(&map, TvMode::PerField1d);
    let tv2 = tv_value(&map, TvMode::Full2d);
    println!("per_field_1d TV = {tv1}, full_2d TV = {tv2:.6}");
    println!(
        "smoothed (delta = {DEFAULT_DELTA:e}): {:.6}",
        tv_smoothed_value(&map, TvMode::PerField1d, DEFAULT_DELTA)
    );

    let v = nonascending_direction(&map, TvMode::PerField1d, DEFAULT_DELTA);
    for row in v.chunks(4) {
        println!("{}", row.iter().map(|d| format!("{d:+.3}")).collect::<Vec<_>>().join(" "));
    }
    let stepped: Vec<f64> = x.iter().zip(&v).map(|(a, d)| a + 0.5 * d).collect();
    let after = tv_value(&IntensityMap::new(&stepped, 3, 4)?, TvMode::PerField1d);
    println!("TV after a step of 0.5 along it: {after:.4}");
    Ok((tv1, after))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
