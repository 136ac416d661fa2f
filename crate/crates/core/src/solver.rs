//! ART for interval inequalities as the feasibility-seeking operator, the
//! plain iteration built on it, and its TV-superiorized version.
//!
//! One sweep applies the relaxed interval projection to every row with a
//! nonzero `a^j` in ascending row order and then clips to `x ≥ 0`. The
//! superiorized run interleaves nonascending TV perturbations with
//! step sizes `η_ℓ = a^ℓ`, `ℓ` advancing over the whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{proximity, ConstraintError, ConstraintSystem};
use crate::matrix::DoseInfluenceMatrix;
use crate::objective::{nonascending_direction, tv_value, IntensityMap, TvMode, DEFAULT_DELTA};
use crate::phantom::Phantom;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("invalid solver parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("step-size kernel underflowed to zero at ℓ = {ell} (sweep {sweep}, inner step {step})")]
    KernelExhausted { ell: i64, sweep: usize, step: usize },
    #[error("witness violates row {row}: prescription and margin band do not overlap around its dose")]
    WitnessInfeasible { row: usize },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Relaxation parameter of the row step, in (0, 2).
    pub lambda: f64,
    /// Proximity threshold (Gy RMS) defining the ε-output.
    pub epsilon: f64,
    pub max_sweeps: usize,
    /// Perturbations per sweep.
    pub inner_steps: usize,
    /// Base of the step-size kernel `η_ℓ = a^ℓ`, in (0, 1).
    pub kernel_a: f64,
    pub tv_mode: TvMode,
    pub smoothing_delta: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            epsilon: 0.5,
            max_sweeps: 200,
            inner_steps: 20,
            kernel_a: 0.99,
            tv_mode: TvMode::PerField1d,
            smoothing_delta: DEFAULT_DELTA,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |field, reason: &str| {
            Err(SolverError::InvalidParams {
                field,
                reason: reason.to_string(),
            })
        };
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return bad("lambda", "must lie in (0, 2)");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", "must be positive");
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps", "must be at least 1");
        }
        if !(self.kernel_a > 0.0 && self.kernel_a < 1.0) {
            return bad("kernel_a", "must lie in (0, 1)");
        }
        if !(self.smoothing_delta > 0.0 && self.smoothing_delta.is_finite()) {
            return bad("smoothing_delta", "must be positive");
        }
        Ok(())
    }

    /// `Σ_ℓ a^ℓ`, the bound on the total perturbation step.
    pub fn kernel_sum(&self) -> f64 {
        1.0 / (1.0 - self.kernel_a)
    }
}

/// `η_ℓ = a^ℓ`.
#[inline]
pub fn eta(kernel_a: f64, ell: i64) -> f64 {
    kernel_a.powi(ell as i32)
}

/// State after sweep `sweep` (0 = the initial point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub proximity: f64,
    pub tv: f64,
    /// Sum of accepted perturbation steps so far.
    pub sum_beta: f64,
}

/// One accepted perturbation `z = y^{k,n} + β·v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbation {
    pub sweep: usize,
    pub step: usize,
    pub ell: i64,
    pub beta: f64,
    /// TV at the accepted point.
    pub tv_accepted: f64,
    /// TV at the outer iterate `y^k` it was compared against.
    pub tv_outer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    /// ε-output found at this sweep index.
    Reached { sweep: usize },
    NotReached { max_sweeps: usize },
}

impl Outcome {
    pub fn sweep(&self) -> Option<usize> {
        match *self {
            Outcome::Reached { sweep } => Some(sweep),
            Outcome::NotReached { .. } => None,
        }
    }

    pub fn is_reached(&self) -> bool {
        matches!(self, Outcome::Reached { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<SweepRecord>,
    pub perturbations: Vec<Perturbation>,
    /// Trial steps drawn from the kernel and rejected.
    pub rejected: usize,
    pub outcome: Outcome,
    pub final_x: Vec<f64>,
}

impl RunTrace {
    pub fn last(&self) -> &SweepRecord {
        self.records.last().expect("a trace always has the initial record")
    }

    pub fn sum_beta(&self) -> f64 {
        self.perturbations.iter().map(|p| p.beta).sum()
    }
}

/// Relaxed projection of `x` onto the slab `lower_j ≤ ⟨a^j, x⟩ ≤ upper_j`.
pub fn art_row_step(
    x: &mut [f64],
    sys: &ConstraintSystem,
    j: usize,
    lambda: f64,
) -> Result<(), SolverError> {
    let a = sys.matrix();
    let norm_sq = a.row_norm_sq(j);
    if norm_sq <= 0.0 {
        return Err(SolverError::ZeroRow(j));
    }
    let p = a.row_dot(j, x);
    let target = if p > sys.upper()[j] {
        sys.upper()[j]
    } else if p < sys.lower()[j] {
        sys.lower()[j]
    } else {
        return Ok(());
    };
    a.add_row_scaled(j, lambda * (target - p) / norm_sq, x);
    Ok(())
}

/// One full cyclic pass over the active rows followed by `x ← max(x, 0)`.
pub fn art_sweep(x: &mut [f64], sys: &ConstraintSystem, lambda: f64) {
    let a = sys.matrix();
    let (lower, upper) = (sys.lower(), sys.upper());
    for &j in sys.active_rows() {
        let p = a.row_dot(j, x);
        let target = if p > upper[j] {
            upper[j]
        } else if p < lower[j] {
            lower[j]
        } else {
            continue;
        };
        a.add_row_scaled(j, lambda * (target - p) / a.row_norm_sq(j), x);
    }
    clip_nonnegative(x);
}

fn clip_nonnegative(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Unterminated sequence of plain ART iterates `x^0, x^1, …`.
pub fn basic_iterates<'a>(
    x0: Vec<f64>,
    sys: &'a ConstraintSystem,
    lambda: f64,
) -> impl Iterator<Item = Vec<f64>> + 'a {
    std::iter::successors(Some(x0), move |x| {
        let mut next = x.clone();
        art_sweep(&mut next, sys, lambda);
        Some(next)
    })
}

/// Plain feasibility-seeking: sweep until the ε-output or `max_sweeps`.
pub fn run_basic(x0: &[f64], sys: &ConstraintSystem, params: &SolverParams) -> Result<RunTrace, SolverError> {
    run_observed(x0, sys, params, false, |_, _| {})
}

/// The superiorized version of [`run_basic`].
pub fn run_superiorized(
    y0: &[f64],
    sys: &ConstraintSystem,
    params: &SolverParams,
) -> Result<RunTrace, SolverError> {
    run_observed(y0, sys, params, true, |_, _| {})
}

/// Shared driver; `observe(k, y^k)` is called for every outer iterate that
/// is examined for ε-compatibility.
pub fn run_observed<F>(
    x0: &[f64],
    sys: &ConstraintSystem,
    params: &SolverParams,
    superiorize: bool,
    mut observe: F,
) -> Result<RunTrace, SolverError>
where
    F: FnMut(usize, &[f64]),
{
    params.validate()?;
    if x0.len() != sys.num_cols() {
        return Err(SolverError::DimensionMismatch {
            expected: sys.num_cols(),
            got: x0.len(),
        });
    }
    let (fields, beamlets) = sys.layout();
    let phi = |x: &[f64]| {
        let map = IntensityMap::new(x, fields, beamlets).expect("layout checked by the system");
        tv_value(&map, params.tv_mode)
    };

    let mut y = x0.to_vec();
    let mut records = Vec::new();
    let mut perturbations = Vec::new();
    let mut rejected = 0;
    let mut sum_beta = 0.0;
    let mut ell: i64 = -1;

    let mut k = 0;
    let outcome = loop {
        observe(k, &y);
        let prox = proximity(&y, sys)?.value;
        let tv_outer = phi(&y);
        records.push(SweepRecord {
            sweep: k,
            proximity: prox,
            tv: tv_outer,
            sum_beta,
        });
        if prox <= params.epsilon {
            break Outcome::Reached { sweep: k };
        }
        if k == params.max_sweeps {
            break Outcome::NotReached {
                max_sweeps: params.max_sweeps,
            };
        }

        if superiorize {
            let mut inner = y.clone();
            for n in 0..params.inner_steps {
                let map = IntensityMap::new(&inner, fields, beamlets).expect("layout");
                let v = nonascending_direction(&map, params.tv_mode, params.smoothing_delta);
                loop {
                    ell += 1;
                    let beta = eta(params.kernel_a, ell);
                    if beta == 0.0 {
                        return Err(SolverError::KernelExhausted { ell, sweep: k, step: n });
                    }
                    let z: Vec<f64> = inner.iter().zip(&v).map(|(y, v)| y + beta * v).collect();
                    let tv_z = phi(&z);
                    if tv_z <= tv_outer {
                        sum_beta += beta;
                        perturbations.push(Perturbation {
                            sweep: k,
                            step: n,
                            ell,
                            beta,
                            tv_accepted: tv_z,
                            tv_outer,
                        });
                        inner = z;
                        break;
                    }
                    rejected += 1;
                }
            }
            y = inner;
        }
        art_sweep(&mut y, sys, params.lambda);
        k += 1;
    };

    Ok(RunTrace {
        records,
        perturbations,
        rejected,
        outcome,
        final_x: y,
    })
}

/// Shape of the synthetic witness drawn by [`make_feasible_case`].
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessOptions {
    /// Upper end of the uniform draw for each constant segment level.
    pub max_level: f64,
    /// Each field profile has between 1 and this many constant segments.
    pub max_segments: usize,
    /// Also intersect each row's band with its structure prescription.
    pub respect_prescriptions: bool,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self {
            max_level: 10.0,
            max_segments: 4,
            respect_prescriptions: false,
        }
    }
}

/// Draws a nonnegative piecewise-constant intensity map `x*`.
pub fn draw_witness(fields: usize, beamlets: usize, opts: &WitnessOptions, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(fields * beamlets);
    for _ in 0..fields {
        let segments = rng.gen_range(1..=opts.max_segments.max(1)).min(beamlets);
        let mut cuts: Vec<usize> = (0..segments - 1).map(|_| rng.gen_range(1..beamlets.max(2))).collect();
        cuts.sort_unstable();
        cuts.push(beamlets);
        let mut start = 0;
        for cut in cuts {
            let level = rng.gen_range(0.0..=opts.max_level);
            x.extend(std::iter::repeat(level).take(cut.saturating_sub(start)));
            start = start.max(cut);
        }
    }
    x
}

/// A system with a known feasible point: bounds are a band of half-width
/// `margin_gy` around `d* = A x*` for a seeded witness `x*`.
///
/// Rows whose dose sits within `margin_gy` of zero get `[0, 2·margin_gy]`,
/// so every interval is at least `2·margin_gy` wide.
pub fn make_feasible_case(
    phantom: &Phantom,
    matrix: std::sync::Arc<DoseInfluenceMatrix>,
    margin_gy: f64,
    seed: u64,
    opts: &WitnessOptions,
) -> Result<(ConstraintSystem, Vec<f64>), SolverError> {
    if !(margin_gy > 0.0 && margin_gy.is_finite()) {
        return Err(SolverError::InvalidParams {
            field: "margin_gy",
            reason: "must be positive".into(),
        });
    }
    let prescribed = crate::constraints::build_constraints(phantom, matrix)?;
    let (fields, beamlets) = prescribed.layout();
    let witness = draw_witness(fields, beamlets, opts, seed);
    let dose = prescribed.matrix().mul_vec(&witness).map_err(|_| SolverError::DimensionMismatch {
        expected: prescribed.num_cols(),
        got: witness.len(),
    })?;
    let mut lower = Vec::with_capacity(dose.len());
    let mut upper = Vec::with_capacity(dose.len());
    for (j, &d) in dose.iter().enumerate() {
        let mut lo = (d - margin_gy).max(0.0);
        let mut hi = (d + margin_gy).max(2.0 * margin_gy);
        if opts.respect_prescriptions {
            lo = lo.max(prescribed.lower()[j]);
            hi = hi.min(prescribed.upper()[j]);
            if !(lo <= d && d <= hi) {
                return Err(SolverError::WitnessInfeasible { row: j });
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    Ok((prescribed.with_bounds(lower, upper)?, witness))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(rows: &[Vec<f64>], lower: Vec<f64>, upper: Vec<f64>) -> ConstraintSystem {
        ConstraintSystem::from_bounds(DoseInfluenceMatrix::from_dense(rows).unwrap(), lower, upper).unwrap()
    }

    #[test]
    fn row_step_lands_on_violated_face() {
        let sys = system(&[vec![1.0, 0.0]], vec![1.0], vec![2.0]);
        let mut x = vec![0.0, 0.0];
        art_row_step(&mut x, &sys, 0, 1.0).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);

        let sys = system(&[vec![1.0, 1.0]], vec![0.0], vec![2.0]);
        let mut x = vec![3.0, 3.0];
        art_row_step(&mut x, &sys, 0, 1.0).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);

        let mut x = vec![0.5, 0.7];
        art_row_step(&mut x, &sys, 0, 1.0).unwrap();
        assert_eq!(x, vec![0.5, 0.7]);
    }

    #[test]
    fn relaxation_scales_the_step() {
        let sys = system(&[vec![2.0]], vec![4.0], vec![4.0]);
        let mut x = vec![0.0];
        art_row_step(&mut x, &sys, 0, 0.5).unwrap();
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn zero_row_is_a_defect() {
        let sys = system(&[vec![0.0, 0.0], vec![1.0, 1.0]], vec![1.0, 0.0], vec![2.0, 1.0]);
        let mut x = vec![0.0, 0.0];
        assert_eq!(art_row_step(&mut x, &sys, 0, 1.0), Err(SolverError::ZeroRow(0)));
        assert_eq!(sys.active_rows(), &[1]);
    }

    #[test]
    fn sweep_of_one_row_is_step_then_clip() {
        let sys = system(&[vec![1.0, 1.0]], vec![0.0], vec![1.0]);
        let mut x = vec![4.0, -1.0];
        let mut y = x.clone();
        art_sweep(&mut x, &sys, 1.0);
        art_row_step(&mut y, &sys, 0, 1.0).unwrap();
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        assert_eq!(x, y);
    }

    #[test]
    fn feasible_start_is_a_zero_sweep_output() {
        let sys = system(&[vec![1.0, 1.0]], vec![1.0], vec![3.0]);
        let t = run_basic(&[1.0, 1.0], &sys, &SolverParams::default()).unwrap();
        assert_eq!(t.outcome, Outcome::Reached { sweep: 0 });
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.final_x, vec![1.0, 1.0]);
    }

    #[test]
    fn contradictory_rows_never_reach() {
        // ⟨a,x⟩ ≥ 10 and ⟨a,x⟩ ≤ 1 for the same a.
        let sys = system(&[vec![1.0, 1.0], vec![1.0, 1.0]], vec![10.0, 0.0], vec![11.0, 1.0]);
        let params = SolverParams {
            max_sweeps: 15,
            ..SolverParams::default()
        };
        let t = run_basic(&[0.0, 0.0], &sys, &params).unwrap();
        assert_eq!(t.outcome, Outcome::NotReached { max_sweeps: 15 });
        assert_eq!(t.records.len(), 16);
        let t = run_superiorized(&[0.0, 0.0], &sys, &params).unwrap();
        assert_eq!(t.outcome, Outcome::NotReached { max_sweeps: 15 });
    }

    #[test]
    fn params_validation() {
        let ok = SolverParams::default();
        assert!(ok.validate().is_ok());
        for p in [
            SolverParams { lambda: 2.0, ..ok.clone() },
            SolverParams { lambda: 0.0, ..ok.clone() },
            SolverParams { epsilon: 0.0, ..ok.clone() },
            SolverParams { max_sweeps: 0, ..ok.clone() },
            SolverParams { kernel_a: 1.0, ..ok.clone() },
            SolverParams { smoothing_delta: 0.0, ..ok.clone() },
        ] {
            assert!(matches!(p.validate(), Err(SolverError::InvalidParams { .. })));
        }
        assert!((ok.kernel_sum() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_exhaustion_is_reported() {
        // A tiny kernel base underflows after a few hundred draws.
        let sys = system(&[vec![1.0, 1.0, 1.0]], vec![100.0], vec![101.0])
            .with_layout(1, 3)
            .unwrap();
        let params = SolverParams {
            kernel_a: 1e-3,
            inner_steps: 200,
            max_sweeps: 10,
            epsilon: 1e-9,
            ..SolverParams::default()
        };
        let err = run_superiorized(&[0.0, 5.0, 0.0], &sys, &params).unwrap_err();
        assert!(matches!(err, SolverError::KernelExhausted { .. }), "{err:?}");
    }

    #[test]
    fn witness_is_piecewise_constant_and_seeded() {
        let opts = WitnessOptions::default();
        let a = draw_witness(3, 16, &opts, 7);
        let b = draw_witness(3, 16, &opts, 7);
        let c = draw_witness(3, 16, &opts, 8);
        assert_eq!(a.len(), 48);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&v| (0.0..=10.0).contains(&v)));
        for row in a.chunks(16) {
            let jumps = row.windows(2).filter(|w| w[0] != w[1]).count();
            assert!(jumps < 4);
        }
    }
}
