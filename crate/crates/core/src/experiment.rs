//! JSON run configuration and the run / compare / phantom commands built on
//! top of it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{build_constraints, ConstraintSystem};
use crate::eval::{
    check_acceptance, compute_dose, compute_dvh_on_grid, AcceptanceCriterion, DvhCurve, EvalError,
    Verdict, DEFAULT_DVH_BINS,
};
use crate::matrix::DoseInfluenceMatrix;
use crate::objective::TvMode;
use crate::phantom::{build_dose_matrix, generate_phantom, Phantom, PhantomSpec, StructureKind};
use crate::report;
use crate::solver::{make_feasible_case, run_observed, RunTrace, SolverError, SolverParams, SweepRecord, WitnessOptions};

/// The configuration shipped as `configs/default.json`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.json");

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    #[default]
    Zeros,
    Constant(f64),
    FromFile(PathBuf),
}

/// Replaces the prescribed bounds with a band around the dose of a seeded
/// witness plan, guaranteeing a nonempty feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibleCaseSpec {
    pub margin_gy: f64,
    #[serde(default = "default_level")]
    pub max_level: f64,
    #[serde(default = "default_segments")]
    pub max_segments: usize,
    #[serde(default)]
    pub respect_prescriptions: bool,
}

fn default_level() -> f64 {
    WitnessOptions::default().max_level
}

fn default_segments() -> usize {
    WitnessOptions::default().max_segments
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phantom: PhantomSpec,
    /// Per-structure `[lower, upper]` overrides, `Body` included.
    #[serde(default)]
    pub prescriptions: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub criteria: Vec<AcceptanceCriterion>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasible_case: Option<FeasibleCaseSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("config field `{field}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid {
        field: String,
        message: String,
        line: Option<usize>,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.into(),
            message: message.into(),
            line: None,
        }
    }

    // Points an `Invalid` error at the first line mentioning its key.
    fn located(self, text: &str) -> Self {
        match self {
            ConfigError::Invalid {
                field,
                message,
                line: None,
            } => {
                let key = field
                    .rsplit('.')
                    .next()
                    .unwrap_or(&field)
                    .split('[')
                    .next()
                    .unwrap_or_default()
                    .to_string();
                let needle = format!("\"{key}\"");
                let line = text.lines().position(|l| l.contains(&needle)).map(|i| i + 1);
                ConfigError::Invalid {
                    field,
                    message,
                    line,
                }
            }
            other => other,
        }
    }
}

/// Command-line overrides; `Some` values replace the file's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub kernel_a: Option<f64>,
    pub inner_steps: Option<usize>,
    pub epsilon: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub seed: Option<u64>,
    pub tv_mode: Option<TvMode>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses and validates a configuration. Relative `from_file` paths
    /// are resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        if let (InitSpec::FromFile(p), Some(base)) = (&cfg.init, base_dir) {
            if p.is_relative() {
                cfg.init = InitSpec::FromFile(base.join(p));
            }
        }
        cfg.validate().map_err(|e| e.located(text))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, path.parent())
    }

    /// The shipped desk-scale configuration.
    pub fn default_desk() -> Self {
        Self::from_json(DEFAULT_CONFIG, None).expect("shipped default config is valid")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        let s = &mut self.solver;
        s.lambda = o.lambda.unwrap_or(s.lambda);
        s.kernel_a = o.kernel_a.unwrap_or(s.kernel_a);
        s.inner_steps = o.inner_steps.unwrap_or(s.inner_steps);
        s.epsilon = o.epsilon.unwrap_or(s.epsilon);
        s.max_sweeps = o.max_sweeps.unwrap_or(s.max_sweeps);
        s.tv_mode = o.tv_mode.unwrap_or(s.tv_mode);
        self.seed = o.seed.unwrap_or(self.seed);
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.effective_phantom()?;
        self.solver.validate().map_err(|e| match e {
            SolverError::InvalidParams { field, reason } => {
                ConfigError::invalid(format!("solver.{field}"), reason)
            }
            other => ConfigError::invalid("solver", other.to_string()),
        })?;
        let known = |name: &str| {
            name == crate::phantom::BODY || self.phantom.structures.iter().any(|s| s.name == name)
        };
        for (k, c) in self.criteria.iter().enumerate() {
            if !known(&c.structure) {
                return Err(ConfigError::invalid(
                    format!("criteria[{k}].structure"),
                    format!("unknown structure `{}`", c.structure),
                ));
            }
            c.validate()
                .map_err(|m| ConfigError::invalid(format!("criteria[{k}].limit"), m))?;
        }
        if let InitSpec::Constant(c) = self.init {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(ConfigError::invalid("init.constant", "must be finite and nonnegative"));
            }
        }
        if let Some(fc) = &self.feasible_case {
            if !(fc.margin_gy > 0.0 && fc.margin_gy.is_finite()) {
                return Err(ConfigError::invalid("feasible_case.margin_gy", "must be positive"));
            }
            if !(fc.max_level >= 0.0 && fc.max_level.is_finite()) || fc.max_segments == 0 {
                return Err(ConfigError::invalid("feasible_case", "max_level ≥ 0 and max_segments ≥ 1 required"));
            }
        }
        Ok(())
    }

    /// Phantom spec with prescription overrides folded in.
    pub fn effective_phantom(&self) -> Result<PhantomSpec, ConfigError> {
        let mut spec = self.phantom.clone();
        for (name, &[lo, hi]) in &self.prescriptions {
            let field = format!("prescriptions.{name}");
            if name == crate::phantom::BODY {
                if lo != 0.0 {
                    return Err(ConfigError::invalid(field, "Body lower bound must be 0"));
                }
                spec.body_upper_gy = hi;
                continue;
            }
            let s = spec
                .structures
                .iter_mut()
                .find(|s| &s.name == name)
                .ok_or_else(|| ConfigError::invalid(field, "unknown structure"))?;
            s.lower_gy = lo;
            s.upper_gy = hi;
        }
        spec.validate().map_err(|e| match e {
            crate::phantom::PhantomError::InvalidSpec { field, reason } => {
                ConfigError::invalid(format!("phantom.{field}"), reason)
            }
            other => ConfigError::invalid("phantom", other.to_string()),
        })?;
        Ok(spec)
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("phantom: {0}")]
    Phantom(#[from] crate::phantom::PhantomError),
    #[error("constraints: {0}")]
    Constraint(#[from] crate::constraints::ConstraintError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("evaluation: {0}")]
    Eval(#[from] EvalError),
    #[error("initial intensities: {0}")]
    Init(String),
    #[error("writing {path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// Process exit code: configuration and validation problems are 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// A prepared planning problem: phantom, matrix, constraints, start point.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub phantom: Phantom,
    pub matrix: Arc<DoseInfluenceMatrix>,
    pub system: ConstraintSystem,
    pub x0: Vec<f64>,
    /// Feasible point when the system came from a witness plan.
    pub witness: Option<Vec<f64>>,
}

/// Everything one solver arm produced.
#[derive(Debug, Clone)]
pub struct ArmResult {
    pub superiorized: bool,
    pub trace: RunTrace,
    pub dose: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl ArmResult {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failed(&self) -> Vec<String> {
        self.verdicts.iter().filter(|v| !v.pass).map(|v| v.name.clone()).collect()
    }
}

impl Experiment {
    pub fn prepare(config: RunConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let spec = config.effective_phantom()?;
        let phantom = generate_phantom(&spec)?;
        let matrix = Arc::new(build_dose_matrix(&phantom)?);
        let (system, witness) = match &config.feasible_case {
            None => (build_constraints(&phantom, Arc::clone(&matrix))?, None),
            Some(fc) => {
                let opts = WitnessOptions {
                    max_level: fc.max_level,
                    max_segments: fc.max_segments,
                    respect_prescriptions: fc.respect_prescriptions,
                };
                let (sys, w) =
                    make_feasible_case(&phantom, Arc::clone(&matrix), fc.margin_gy, config.seed, &opts)?;
                (sys, Some(w))
            }
        };
        let n = matrix.cols();
        let x0 = match &config.init {
            InitSpec::Zeros => vec![0.0; n],
            InitSpec::Constant(c) => vec![*c; n],
            InitSpec::FromFile(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| ExperimentError::Init(format!("{}: {e}", path.display())))?;
                let beams = phantom.beams();
                report::parse_intensities_csv(&text, beams.num_fields, beams.beamlets_per_field)
                    .map_err(|e| ExperimentError::Init(format!("{}: {e}", path.display())))?
            }
        };
        Ok(Self {
            config,
            phantom,
            matrix,
            system,
            x0,
            witness,
        })
    }

    /// Runs one arm with the configured parameters, optionally capping the
    /// number of sweeps.
    pub fn run_arm(&self, superiorize: bool, max_sweeps: Option<usize>) -> Result<ArmResult, ExperimentError> {
        let mut params = self.config.solver.clone();
        if let Some(cap) = max_sweeps {
            params.max_sweeps = cap.max(1);
        }
        let trace = run_observed(&self.x0, &self.system, &params, superiorize, |_, _| {})?;
        let dose = compute_dose(&trace.final_x, &self.matrix)?;
        let verdicts = self.verdicts(&dose)?;
        Ok(ArmResult {
            superiorized: superiorize,
            trace,
            dose,
            verdicts,
        })
    }

    pub fn verdicts(&self, dose: &[f64]) -> Result<Vec<Verdict>, EvalError> {
        check_acceptance(dose, |name| self.phantom.mask(name), &self.config.criteria)
    }

    /// Cumulative DVH of every structure on a shared dose grid.
    pub fn dvh_curves(&self, dose: &[f64], max_dose: f64) -> Result<Vec<DvhCurve>, EvalError> {
        self.phantom
            .structures()
            .iter()
            .filter(|s| !s.voxels.is_empty())
            .map(|s| compute_dvh_on_grid(&s.name, dose, &s.voxels, max_dose, DEFAULT_DVH_BINS))
            .collect()
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), ExperimentError> {
        let dir = &self.config.output_dir;
        report::write_file(dir, name, contents).map_err(|source| ExperimentError::Output {
            path: dir.join(name),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub superiorized: bool,
    pub epsilon_output_sweep: Option<usize>,
    pub reached: bool,
    pub sweeps_run: usize,
    pub final_proximity: f64,
    pub final_tv: f64,
    pub sum_beta: f64,
    pub perturbations_accepted: usize,
    pub perturbations_rejected: usize,
    pub all_pass: bool,
    pub criteria: Vec<Verdict>,
}

impl From<&ArmResult> for ArmSummary {
    fn from(arm: &ArmResult) -> Self {
        let last = arm.trace.last();
        Self {
            superiorized: arm.superiorized,
            epsilon_output_sweep: arm.trace.outcome.sweep(),
            reached: arm.trace.outcome.is_reached(),
            sweeps_run: last.sweep,
            final_proximity: last.proximity,
            final_tv: last.tv,
            sum_beta: last.sum_beta,
            perturbations_accepted: arm.trace.perturbations.len(),
            perturbations_rejected: arm.trace.rejected,
            all_pass: arm.all_pass(),
            criteria: arm.verdicts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub epsilon: f64,
    #[serde(flatten)]
    pub arm: ArmSummary,
}

/// Result of `run`: exit code 0 when the ε-output was reached, 2 otherwise.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub arm: ArmResult,
    pub output_dir: PathBuf,
}

/// Runs one arm and writes `summary.json`, `dvh.csv`, `iterates.csv` and
/// `intensities.csv` into the output directory.
pub fn cmd_run(config: RunConfig, superiorize: bool) -> Result<RunOutcome, ExperimentError> {
    let exp = Experiment::prepare(config)?;
    let arm = exp.run_arm(superiorize, None)?;
    let summary = RunSummary {
        epsilon: exp.config.solver.epsilon,
        arm: ArmSummary::from(&arm),
    };
    exp.write("summary.json", &report::to_json(&summary))?;
    exp.write("iterates.csv", &report::iterates_csv(&arm.trace.records))?;
    exp.write(
        "intensities.csv",
        &report::intensities_csv(&arm.trace.final_x, exp.phantom.beams().beamlets_per_field),
    )?;
    let max = arm.dose.iter().copied().fold(0.0, f64::max);
    let curves = exp.dvh_curves(&arm.dose, max)?;
    exp.write("dvh.csv", &report::dvh_csv(curves.iter().map(|c| ("", c)), false))?;
    Ok(RunOutcome {
        exit_code: if arm.trace.outcome.is_reached() { 0 } else { 2 },
        arm,
        output_dir: exp.config.output_dir.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareArm {
    #[serde(flatten)]
    pub summary: ArmSummary,
    pub trace: Vec<SweepRecord>,
}

impl From<&ArmResult> for CompareArm {
    fn from(arm: &ArmResult) -> Self {
        Self {
            summary: ArmSummary::from(arm),
            trace: arm.trace.records.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub epsilon: f64,
    pub superiorized: CompareArm,
    pub basic: CompareArm,
    /// Plain ART limited to the superiorized arm's sweep count.
    pub basic_capped: CompareArm,
    pub capped_at_sweeps: usize,
    /// `100·(1 − TV_sup / TV_basic)` at each arm's own final iterate.
    pub tv_reduction_pct: f64,
    /// The superiorized arm passes every criterion while the capped plain
    /// arm fails at least one.
    pub headline_holds: bool,
    pub basic_capped_failed: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub exit_code: i32,
    pub report: CompareReport,
    pub superiorized: ArmResult,
    pub basic: ArmResult,
    pub basic_capped: ArmResult,
}

/// Runs both arms from the same start and writes `compare.json` plus a
/// side-by-side `dvh_compare.csv`.
pub fn cmd_compare(config: RunConfig) -> Result<CompareOutcome, ExperimentError> {
    let exp = Experiment::prepare(config)?;
    let (sup, basic) = rayon::join(|| exp.run_arm(true, None), || exp.run_arm(false, None));
    let (sup, basic) = (sup?, basic?);
    let cap = sup.trace.last().sweep;
    let capped = exp.run_arm(false, Some(cap))?;

    let tv_sup = sup.trace.last().tv;
    let tv_basic = basic.trace.last().tv;
    let tv_reduction_pct = if tv_basic > 0.0 {
        100.0 * (1.0 - tv_sup / tv_basic)
    } else {
        0.0
    };
    let report = CompareReport {
        epsilon: exp.config.solver.epsilon,
        superiorized: CompareArm::from(&sup),
        basic: CompareArm::from(&basic),
        basic_capped: CompareArm::from(&capped),
        capped_at_sweeps: cap,
        tv_reduction_pct,
        headline_holds: sup.trace.outcome.is_reached() && sup.all_pass() && !capped.all_pass(),
        basic_capped_failed: capped.failed(),
    };
    exp.write("compare.json", &report::to_json(&report))?;

    let max = sup.dose.iter().chain(&capped.dose).copied().fold(0.0, f64::max);
    let sup_curves = exp.dvh_curves(&sup.dose, max)?;
    let capped_curves = exp.dvh_curves(&capped.dose, max)?;
    let rows = sup_curves
        .iter()
        .map(|c| ("superiorized", c))
        .chain(capped_curves.iter().map(|c| ("basic_capped", c)));
    exp.write("dvh_compare.csv", &report::dvh_csv(rows, true))?;

    Ok(CompareOutcome {
        exit_code: if sup.trace.outcome.is_reached() { 0 } else { 2 },
        report,
        superiorized: sup,
        basic,
        basic_capped: capped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureStats {
    pub name: String,
    pub kind: StructureKind,
    pub voxels: usize,
    pub lower_gy: f64,
    pub upper_gy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixStats {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub density: f64,
    pub fields: usize,
    pub beamlets_per_field: usize,
    pub zero_rows: usize,
    pub min_column_nnz: usize,
    pub max_column_nnz: usize,
    pub min_column_sum: f64,
    pub max_column_sum: f64,
    pub structures: Vec<StructureStats>,
}

impl MatrixStats {
    pub fn new(phantom: &Phantom, a: &DoseInfluenceMatrix) -> Self {
        let counts = a.column_counts();
        let sums = a.column_sums();
        let beams = phantom.beams();
        Self {
            rows: a.rows(),
            cols: a.cols(),
            nnz: a.nnz(),
            density: a.nnz() as f64 / (a.rows() * a.cols()).max(1) as f64,
            fields: beams.num_fields,
            beamlets_per_field: beams.beamlets_per_field,
            zero_rows: (0..a.rows()).filter(|&j| a.row_norm_sq(j) == 0.0).count(),
            min_column_nnz: counts.iter().copied().min().unwrap_or(0),
            max_column_nnz: counts.iter().copied().max().unwrap_or(0),
            min_column_sum: sums.iter().copied().fold(f64::INFINITY, f64::min),
            max_column_sum: sums.iter().copied().fold(0.0, f64::max),
            structures: phantom
                .structures()
                .iter()
                .map(|s| StructureStats {
                    name: s.name.clone(),
                    kind: s.kind,
                    voxels: s.voxels.len(),
                    lower_gy: s.lower_gy,
                    upper_gy: s.upper_gy,
                })
                .collect(),
        }
    }
}

/// Writes `phantom_labels.csv` and `matrix_stats.json`.
pub fn cmd_phantom(config: RunConfig) -> Result<MatrixStats, ExperimentError> {
    config.validate()?;
    let phantom = generate_phantom(&config.effective_phantom()?)?;
    let a = build_dose_matrix(&phantom)?;
    let stats = MatrixStats::new(&phantom, &a);
    let dir = &config.output_dir;
    let write = |name: &str, contents: String| {
        report::write_file(dir, name, &contents).map_err(|source| ExperimentError::Output {
            path: dir.join(name),
            source,
        })
    };
    write("phantom_labels.csv", phantom.labels_csv())?;
    write("matrix_stats.json", report::to_json(&stats))?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_parses() {
        let cfg = RunConfig::default_desk();
        assert_eq!((cfg.phantom.grid.nx, cfg.phantom.grid.ny), (64, 64));
        assert_eq!(cfg.phantom.beams.num_fields, 7);
        assert_eq!(cfg.phantom.beams.beamlets_per_field, 32);
    }

    #[test]
    fn missing_grid_is_a_parse_error_with_line() {
        let text = DEFAULT_CONFIG.replacen("\"grid\"", "\"gird\"", 1);
        let err = RunConfig::from_json(&text, None).unwrap_err();
        match err {
            ConfigError::Parse { message, line, .. } => {
                assert!(message.contains("gird") || message.contains("grid"), "{message}");
                assert!(line > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_field_is_located() {
        let text = DEFAULT_CONFIG.replacen("\"kernel_a\": 0.99", "\"kernel_a\": 1.5", 1);
        assert_ne!(text, DEFAULT_CONFIG);
        let err = RunConfig::from_json(&text, None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("solver.kernel_a"), "{msg}");
        let line = DEFAULT_CONFIG.lines().position(|l| l.contains("\"kernel_a\"")).unwrap() + 1;
        assert!(msg.contains(&format!("line {line}")), "{msg}");
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut cfg = RunConfig::default_desk();
        cfg.apply(&Overrides {
            lambda: Some(1.5),
            inner_steps: Some(0),
            tv_mode: Some(TvMode::Full2d),
            seed: Some(9),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.solver.lambda, 1.5);
        assert_eq!(cfg.solver.inner_steps, 0);
        assert_eq!(cfg.solver.tv_mode, TvMode::Full2d);
        assert_eq!(cfg.seed, 9);
        assert!(cfg
            .apply(&Overrides {
                lambda: Some(2.5),
                ..Overrides::default()
            })
            .is_err());
    }

    #[test]
    fn prescription_overrides_and_unknown_criteria() {
        let mut cfg = RunConfig::default_desk();
        cfg.prescriptions.insert("Body".into(), [0.0, 42.0]);
        assert_eq!(cfg.effective_phantom().unwrap().body_upper_gy, 42.0);
        cfg.prescriptions.insert("Nope".into(), [0.0, 1.0]);
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default_desk();
        cfg.criteria.push(AcceptanceCriterion::min_dose("SmallBowel", 10.0));
        let n = cfg.criteria.len() - 1;
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { field, .. }) if field == format!("criteria[{n}].structure")));
    }
}
