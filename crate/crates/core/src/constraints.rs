//! Two-sided linear dose inequalities `lower ≤ A x ≤ upper`, the proximity
//! function measuring how badly a plan violates them, and ε-output
//! extraction from a sequence of iterates.

use std::sync::Arc;

use thiserror::Error;

use crate::matrix::DoseInfluenceMatrix;
use crate::phantom::Phantom;

#[derive(Debug, Error, PartialEq)]
pub enum ConstraintError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row}: lower bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { row: usize, lower: f64, upper: f64 },
    #[error("no ε-compatible iterate within {0} iterates")]
    NotReached(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

/// The feasible set `C` as per-row dose intervals over a shared matrix.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    matrix: Arc<DoseInfluenceMatrix>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    structure_of_row: Vec<usize>,
    structure_names: Vec<String>,
    active_rows: Vec<usize>,
    layout: (usize, usize),
}

impl ConstraintSystem {
    /// Builds a system from explicit bounds. `structure_of_row[j]` indexes
    /// into `structure_names`.
    pub fn new(
        matrix: Arc<DoseInfluenceMatrix>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        structure_of_row: Vec<usize>,
        structure_names: Vec<String>,
    ) -> Result<Self, ConstraintError> {
        let rows = matrix.rows();
        for len in [lower.len(), upper.len(), structure_of_row.len()] {
            if len != rows {
                return Err(ConstraintError::DimensionMismatch {
                    expected: rows,
                    got: len,
                });
            }
        }
        if structure_of_row.iter().any(|&s| s >= structure_names.len()) {
            return Err(ConstraintError::InvalidArgument(
                "structure index out of range",
            ));
        }
        for (row, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(ConstraintError::InvertedBounds {
                    row,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        // Rows with an all-zero a^j cannot be acted on by a row projection.
        let active_rows = (0..rows).filter(|&j| matrix.row_norm_sq(j) > 0.0).collect();
        let layout = (1, matrix.cols());
        Ok(Self {
            layout,
            matrix,
            lower,
            upper,
            structure_of_row,
            structure_names,
            active_rows,
        })
    }

    /// Single-structure system, convenient for small hand-built cases.
    pub fn from_bounds(
        matrix: DoseInfluenceMatrix,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, ConstraintError> {
        let rows = matrix.rows();
        Self::new(
            Arc::new(matrix),
            lower,
            upper,
            vec![0; rows],
            vec!["all".to_string()],
        )
    }

    /// Sets how the intensity vector folds into a `fields × beamlets` map.
    pub fn with_layout(mut self, fields: usize, beamlets: usize) -> Result<Self, ConstraintError> {
        if fields * beamlets != self.num_cols() {
            return Err(ConstraintError::DimensionMismatch {
                expected: self.num_cols(),
                got: fields * beamlets,
            });
        }
        self.layout = (fields, beamlets);
        Ok(self)
    }

    /// `(fields, beamlets)`; a single field unless set otherwise.
    pub fn layout(&self) -> (usize, usize) {
        self.layout
    }

    /// Replaces the bounds, keeping matrix, layout and structure bookkeeping.
    pub fn with_bounds(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ConstraintError> {
        let (f, b) = self.layout;
        Self::new(
            self.shared_matrix(),
            lower,
            upper,
            self.structure_of_row.clone(),
            self.structure_names.clone(),
        )?
        .with_layout(f, b)
    }

    pub fn matrix(&self) -> &DoseInfluenceMatrix {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> Arc<DoseInfluenceMatrix> {
        Arc::clone(&self.matrix)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn num_rows(&self) -> usize {
        self.lower.len()
    }

    pub fn num_cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn structure_of_row(&self) -> &[usize] {
        &self.structure_of_row
    }

    pub fn structure_names(&self) -> &[String] {
        &self.structure_names
    }

    /// Rows with `‖a^j‖ > 0`, ascending.
    pub fn active_rows(&self) -> &[usize] {
        &self.active_rows
    }

    /// Interval residual `max(0, lo − p) + max(0, p − hi)` for row `j` at
    /// dose `p`.
    #[inline]
    pub fn residual(&self, j: usize, p: f64) -> f64 {
        (self.lower[j] - p).max(0.0) + (p - self.upper[j]).max(0.0)
    }
}

/// Assembles per-voxel bounds from the structure each voxel belongs to.
pub fn build_constraints(
    phantom: &Phantom,
    matrix: Arc<DoseInfluenceMatrix>,
) -> Result<ConstraintSystem, ConstraintError> {
    if matrix.rows() != phantom.num_voxels() {
        return Err(ConstraintError::DimensionMismatch {
            expected: phantom.num_voxels(),
            got: matrix.rows(),
        });
    }
    let structures = phantom.structures();
    let labels = phantom.labels().to_vec();
    let lower = labels.iter().map(|&l| structures[l].lower_gy).collect();
    let upper = labels.iter().map(|&l| structures[l].upper_gy).collect();
    let names = structures.iter().map(|s| s.name.clone()).collect();
    let beams = phantom.beams();
    ConstraintSystem::new(matrix, lower, upper, labels, names)?
        .with_layout(beams.num_fields, beams.beamlets_per_field)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProximityReport {
    /// Root-mean-square interval residual over all rows (Gy).
    pub value: f64,
    pub worst_row: usize,
    pub worst_violation_gy: f64,
}

impl ProximityReport {
    pub fn is_feasible(&self) -> bool {
        self.value == 0.0
    }
}

/// RMS of per-row interval residuals at intensities `x`.
pub fn proximity(x: &[f64], sys: &ConstraintSystem) -> Result<ProximityReport, ConstraintError> {
    let dose = sys
        .matrix()
        .mul_vec(x)
        .map_err(|_| ConstraintError::DimensionMismatch {
            expected: sys.num_cols(),
            got: x.len(),
        })?;
    proximity_of_dose(&dose, sys)
}

/// Same as [`proximity`] for a precomputed dose vector.
pub fn proximity_of_dose(
    dose: &[f64],
    sys: &ConstraintSystem,
) -> Result<ProximityReport, ConstraintError> {
    if dose.len() != sys.num_rows() {
        return Err(ConstraintError::DimensionMismatch {
            expected: sys.num_rows(),
            got: dose.len(),
        });
    }
    let mut sum_sq = 0.0;
    let mut worst = (0, 0.0);
    for (j, &p) in dose.iter().enumerate() {
        let r = sys.residual(j, p);
        sum_sq += r * r;
        if r > worst.1 {
            worst = (j, r);
        }
    }
    let rows = dose.len().max(1) as f64;
    Ok(ProximityReport {
        value: (sum_sq / rows).sqrt(),
        worst_row: worst.0,
        worst_violation_gy: worst.1,
    })
}

/// The first iterate of a sequence that is ε-compatible.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonOutput<T> {
    pub index: usize,
    pub iterate: T,
    pub proximity: f64,
}

/// Index of the first proximity value `≤ epsilon` among the first `cap`
/// values of `stream`.
pub fn first_crossing<I>(stream: I, epsilon: f64, cap: usize) -> Result<usize, ConstraintError>
where
    I: IntoIterator<Item = f64>,
{
    check_eps_cap(epsilon, cap)?;
    stream
        .into_iter()
        .take(cap)
        .position(|p| p <= epsilon)
        .ok_or(ConstraintError::NotReached(cap))
}

/// Scans a stream of intensity vectors for its ε-output with respect to
/// `sys`. At most `cap` iterates are examined.
pub fn epsilon_output<I>(
    seq: I,
    sys: &ConstraintSystem,
    epsilon: f64,
    cap: usize,
) -> Result<EpsilonOutput<Vec<f64>>, ConstraintError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    check_eps_cap(epsilon, cap)?;
    for (index, x) in seq.into_iter().take(cap).enumerate() {
        let prox = proximity(&x, sys)?.value;
        if prox <= epsilon {
            return Ok(EpsilonOutput {
                index,
                iterate: x,
                proximity: prox,
            });
        }
    }
    Err(ConstraintError::NotReached(cap))
}

fn check_eps_cap(epsilon: f64, cap: usize) -> Result<(), ConstraintError> {
    if !(epsilon > 0.0) {
        return Err(ConstraintError::InvalidArgument("epsilon must be positive"));
    }
    if cap == 0 {
        return Err(ConstraintError::InvalidArgument("cap must be at least 1"));
    }
    Ok(())
}
