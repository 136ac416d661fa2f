//! Dose computation, cumulative dose-volume histograms and clinical
//! acceptance checks on a finished plan.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{DoseInfluenceMatrix, MatrixError};

pub const DEFAULT_DVH_BINS: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("structure `{0}` has no voxels")]
    EmptyStructure(String),
    #[error("unknown structure `{0}`")]
    UnknownStructure(String),
    #[error("a histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
}

impl From<MatrixError> for EvalError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::DimensionMismatch { expected, got } => {
                EvalError::DimensionMismatch { expected, got }
            }
            other => unreachable!("mul_vec only reports dimension errors: {other}"),
        }
    }
}

/// `d = A x`.
pub fn compute_dose(x: &[f64], a: &DoseInfluenceMatrix) -> Result<Vec<f64>, EvalError> {
    Ok(a.mul_vec(x)?)
}

/// Cumulative DVH: percent of the structure receiving at least each dose
/// level on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DvhCurve {
    pub structure: String,
    /// `(dose_gy, volume_percent)`, dose ascending from 0.
    pub points: Vec<(f64, f64)>,
}

impl DvhCurve {
    /// Largest sampled dose still covering the whole structure.
    pub fn full_coverage_dose(&self) -> f64 {
        self.points
            .iter()
            .filter(|p| p.1 >= 100.0)
            .map(|p| p.0)
            .fold(0.0, f64::max)
    }

    /// Dose spacing of the grid.
    pub fn bin_width(&self) -> f64 {
        match self.points.as_slice() {
            [a, b, ..] => b.0 - a.0,
            _ => 0.0,
        }
    }
}

/// DVH over `0..=max(d over mask)` with `bins` sample points.
pub fn compute_dvh(
    name: &str,
    dose: &[f64],
    mask: &[usize],
    bins: usize,
) -> Result<DvhCurve, EvalError> {
    let max = structure_doses(name, dose, mask)?
        .fold(0.0, f64::max);
    compute_dvh_on_grid(name, dose, mask, max, bins)
}

/// DVH on the fixed grid `t_k = k·max_dose/(bins−1)`, for plotting several
/// structures on shared axes.
pub fn compute_dvh_on_grid(
    name: &str,
    dose: &[f64],
    mask: &[usize],
    max_dose: f64,
    bins: usize,
) -> Result<DvhCurve, EvalError> {
    if bins < 2 {
        return Err(EvalError::TooFewBins(bins));
    }
    let mut values: Vec<f64> = structure_doses(name, dose, mask)?.collect();
    values.sort_by(f64::total_cmp);
    let m = values.len() as f64;
    let points = (0..bins)
        .map(|k| {
            let t = if k == 0 {
                0.0
            } else {
                max_dose * k as f64 / (bins - 1) as f64
            };
            // Voxels with d ≥ t: everything from the first index not below t.
            let below = values.partition_point(|&d| d < t);
            let pct = if k == 0 {
                100.0
            } else {
                100.0 * (values.len() - below) as f64 / m
            };
            (t, pct)
        })
        .collect();
    Ok(DvhCurve {
        structure: name.to_string(),
        points,
    })
}

fn structure_doses<'a>(
    name: &str,
    dose: &'a [f64],
    mask: &'a [usize],
) -> Result<impl Iterator<Item = f64> + 'a, EvalError> {
    if mask.is_empty() {
        return Err(EvalError::EmptyStructure(name.to_string()));
    }
    if let Some(&j) = mask.iter().find(|&&j| j >= dose.len()) {
        return Err(EvalError::DimensionMismatch {
            expected: dose.len(),
            got: j + 1,
        });
    }
    Ok(mask.iter().map(move |&j| dose[j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CriterionKind {
    MinDoseGy,
    MaxDoseGy,
    /// Percent of the structure strictly above `threshold_gy` must not
    /// exceed the limit.
    VolumeAboveThreshold { threshold_gy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceCriterion {
    pub structure: String,
    pub kind: CriterionKind,
    /// Gy for dose criteria, percent for volume criteria.
    pub limit: f64,
}

impl AcceptanceCriterion {
    pub fn min_dose(structure: &str, limit: f64) -> Self {
        Self {
            structure: structure.into(),
            kind: CriterionKind::MinDoseGy,
            limit,
        }
    }

    pub fn max_dose(structure: &str, limit: f64) -> Self {
        Self {
            structure: structure.into(),
            kind: CriterionKind::MaxDoseGy,
            limit,
        }
    }

    pub fn volume_above(structure: &str, threshold_gy: f64, max_percent: f64) -> Self {
        Self {
            structure: structure.into(),
            kind: CriterionKind::VolumeAboveThreshold { threshold_gy },
            limit: max_percent,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.limit > 0.0 && self.limit.is_finite()) {
            return Err(format!("{}: limit must be positive", self));
        }
        if let CriterionKind::VolumeAboveThreshold { threshold_gy } = self.kind {
            if self.limit > 100.0 {
                return Err(format!("{}: percent limit must be in (0, 100]", self));
            }
            if !(threshold_gy > 0.0 && threshold_gy.is_finite()) {
                return Err(format!("{}: threshold must be positive", self));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AcceptanceCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CriterionKind::MinDoseGy => {
                write!(f, "{}: Min Allowed Dose: {:.2} Gy", self.structure, self.limit)
            }
            CriterionKind::MaxDoseGy => {
                write!(f, "{}: Max Allowed Dose: {:.2} Gy", self.structure, self.limit)
            }
            CriterionKind::VolumeAboveThreshold { threshold_gy } => write!(
                f,
                "{}: No more than {:.2}% of the volume should exceed {:.2} Gy",
                self.structure, self.limit, threshold_gy
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub structure: String,
    pub limit: f64,
    /// Gy or percent, matching the criterion kind.
    pub measured: f64,
    pub pass: bool,
}

/// Evaluates every criterion against the dose `d`. `structure_mask` resolves
/// a structure name to its voxels.
pub fn check_acceptance<'m, F>(
    dose: &[f64],
    structure_mask: F,
    criteria: &[AcceptanceCriterion],
) -> Result<Vec<Verdict>, EvalError>
where
    F: Fn(&str) -> Option<&'m [usize]>,
{
    criteria
        .iter()
        .map(|c| {
            let mask = structure_mask(&c.structure)
                .ok_or_else(|| EvalError::UnknownStructure(c.structure.clone()))?;
            let doses = structure_doses(&c.structure, dose, mask)?;
            let (measured, pass) = match c.kind {
                CriterionKind::MinDoseGy => {
                    let v = doses.fold(f64::INFINITY, f64::min);
                    (v, v >= c.limit)
                }
                CriterionKind::MaxDoseGy => {
                    let v = doses.fold(f64::NEG_INFINITY, f64::max);
                    (v, v <= c.limit)
                }
                CriterionKind::VolumeAboveThreshold { threshold_gy } => {
                    let above = doses.filter(|&d| d > threshold_gy).count();
                    let v = 100.0 * above as f64 / mask.len() as f64;
                    (v, v <= c.limit)
                }
            };
            Ok(Verdict {
                name: c.to_string(),
                structure: c.structure.clone(),
                limit: c.limit,
                measured,
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dose_of_zero_and_basis_vectors() {
        let a = DoseInfluenceMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0], vec![4.0, 0.0]]).unwrap();
        assert_eq!(compute_dose(&[0.0, 0.0], &a).unwrap(), vec![0.0; 3]);
        assert_eq!(compute_dose(&[0.0, 1.0], &a).unwrap(), vec![2.0, 3.0, 0.0]);
        assert!(matches!(
            compute_dose(&[1.0], &a),
            Err(EvalError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn uniform_dose_gives_a_step() {
        let dose = vec![10.0; 5];
        let mask = [0, 1, 2, 3, 4];
        let dvh = compute_dvh_on_grid("PTV", &dose, &mask, 20.0, 21).unwrap();
        for &(t, v) in &dvh.points {
            let expected = if t <= 10.0 { 100.0 } else { 0.0 };
            assert_eq!(v, expected, "t = {t}");
        }
        let own = compute_dvh("PTV", &dose, &mask, 8).unwrap();
        assert_eq!(own.points.last().unwrap(), &(10.0, 100.0));
    }

    #[test]
    fn two_voxels_half_volume_at_midpoint() {
        let dose = vec![5.0, 15.0];
        let dvh = compute_dvh_on_grid("OAR", &dose, &[0, 1], 20.0, 3).unwrap();
        assert_eq!(dvh.points, vec![(0.0, 100.0), (10.0, 50.0), (20.0, 0.0)]);
    }

    #[test]
    fn empty_mask_and_bins() {
        assert_eq!(
            compute_dvh("X", &[1.0], &[], 4),
            Err(EvalError::EmptyStructure("X".into()))
        );
        assert_eq!(compute_dvh("X", &[1.0], &[0], 1), Err(EvalError::TooFewBins(1)));
    }

    #[test]
    fn zero_dose_structure_is_full_at_zero() {
        let dvh = compute_dvh("X", &[0.0, 0.0], &[0, 1], 4).unwrap();
        assert!(dvh.points.iter().all(|&(t, v)| t == 0.0 && v == 100.0));
    }

    fn masks<'a>(table: &'a [(&'a str, Vec<usize>)]) -> impl Fn(&str) -> Option<&'a [usize]> {
        move |name| table.iter().find(|(n, _)| *n == name).map(|(_, m)| m.as_slice())
    }

    #[test]
    fn acceptance_verdicts() {
        // 200 rectum voxels with 17 (8.5%) above 60 Gy, uniform 80 Gy PTV.
        let mut dose = vec![80.0; 10];
        dose.extend((0..200).map(|k| if k < 17 { 65.0 } else { 20.0 }));
        let table = [("PTV", (0..10).collect()), ("Rectum", (10..210).collect())];
        let criteria = [
            AcceptanceCriterion::min_dose("PTV", 75.24),
            AcceptanceCriterion::volume_above("Rectum", 60.0, 50.0),
            AcceptanceCriterion::max_dose("Rectum", 60.0),
        ];
        let v = check_acceptance(&dose, masks(&table), &criteria).unwrap();
        assert_eq!((v[0].measured, v[0].pass), (80.0, true));
        assert!((v[1].measured - 8.5).abs() < 1e-12 && v[1].pass);
        assert_eq!((v[2].measured, v[2].pass), (65.0, false));
        assert_eq!(v[0].name, "PTV: Min Allowed Dose: 75.24 Gy");
    }

    #[test]
    fn cold_spot_fails_min_dose() {
        let dose = vec![80.0, 56.13, 81.0];
        let table = [("PTV", vec![0, 1, 2])];
        let v = check_acceptance(&dose, masks(&table), &[AcceptanceCriterion::min_dose("PTV", 75.24)]).unwrap();
        assert_eq!(v[0].measured, 56.13);
        assert!(!v[0].pass);
    }

    #[test]
    fn threshold_is_strict() {
        let dose = vec![60.0, 60.0];
        let table = [("R", vec![0, 1])];
        let v = check_acceptance(&dose, masks(&table), &[AcceptanceCriterion::volume_above("R", 60.0, 10.0)]).unwrap();
        assert_eq!(v[0].measured, 0.0);
    }

    #[test]
    fn unknown_structure() {
        let table = [("PTV", vec![0])];
        assert_eq!(
            check_acceptance(&[1.0], masks(&table), &[AcceptanceCriterion::min_dose("Bladder", 1.0)]),
            Err(EvalError::UnknownStructure("Bladder".into()))
        );
    }

    #[test]
    fn criterion_validation() {
        assert!(AcceptanceCriterion::volume_above("R", 60.0, 120.0).validate().is_err());
        assert!(AcceptanceCriterion::min_dose("P", -1.0).validate().is_err());
        assert!(AcceptanceCriterion::max_dose("P", 84.74).validate().is_ok());
    }
}
