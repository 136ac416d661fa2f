// Builds the shipped desk phantom, traces every beamlet through it and
// prints a coarse label map plus the shape of the dose-influence matrix.
//
// ```bash
// cargo run --release --example phantom_matrix
// ```

use std::error::Error;

use tvsup::experiment::{MatrixStats, RunConfig};
use tvsup::{build_dose_matrix, generate_phantom};

pub fn run_example() -> Result<MatrixStats, Box<dyn Error>> {
    let config = RunConfig::default_desk();
    let phantom = generate_phantom(&config.effective_phantom()?)?;
    let grid = phantom.grid();

    // every 4th voxel; '.' is Body, otherwise the first letter of the structure
    for iy in (0..grid.ny).step_by(4).rev() {
        let line: String = (0..grid.nx)
            .step_by(4)
            .map(|ix| match phantom.labels()[iy * grid.nx + ix] {
                0 => '.',
                l => phantom.structures()[l].name.chars().next().unwrap_or('?'),
            })
            .collect();
        println!("{line}");
    }

    let matrix = build_dose_matrix(&phantom)?;
    let stats = MatrixStats::new(&phantom, &matrix);
    println!(
        "{} voxels x {} beamlets, {} nonzeros ({:.2}%)",
        stats.rows,
        stats.cols,
        stats.nnz,
        100.0 * stats.density
    );
    println!(
        "column nnz {}..{}, column sums {:.1}..{:.1} mm",
        stats.min_column_nnz, stats.max_column_nnz, stats.min_column_sum, stats.max_column_sum
    );
    for s in &stats.structures {
        println!("{:<8} {:>5} voxels  [{}, {}] Gy", s.name, s.voxels, s.lower_gy, s.upper_gy);
    }
    Ok(stats)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example().map(|_| ())
}
