//! Total-variation superiorization of ART for IMRT inverse planning.
//!
//! The pipeline is: rasterize a synthetic [`phantom`], trace its beamlets
//! into a [`matrix::DoseInfluenceMatrix`], turn structure prescriptions into
//! interval [`constraints`], run the plain or superiorized [`solver`], and
//! score the resulting dose with [`eval`]. [`experiment`] wires these
//! together behind a JSON run configuration.
//!
//! ## Examples
//!
//! - **`phantom_matrix`** - label map and dose-influence matrix of the desk phantom
//! - **`art_feasibility`** - ART sweeps on a small system and on a feasible case
//! - **`tv_objective`** - TV in both modes and the descent direction
//! - **`superiorized_tv`** - TV of plain vs. superiorized ART on seeded feasible cases
//! - **`dvh_acceptance`** - DVH summary and acceptance verdicts of a superiorized plan
//! - **`compare_arms`** - the two-arm experiment from zero and constant starts
//!
//! ```bash
//! cargo run --release --example compare_arms
//! ```

pub mod constraints;
pub mod eval;
pub mod experiment;
pub mod matrix;
pub mod objective;
pub mod phantom;
pub mod raytrace;
pub mod report;
pub mod solver;

pub use constraints::{build_constraints, proximity, ConstraintSystem, ProximityReport};
pub use eval::{check_acceptance, compute_dose, compute_dvh, AcceptanceCriterion, DvhCurve};
pub use matrix::DoseInfluenceMatrix;
pub use objective::{tv_value, IntensityMap, TvMode};
pub use phantom::{build_dose_matrix, generate_phantom, Phantom, PhantomSpec};
pub use solver::{run_basic, run_superiorized, RunTrace, SolverParams};
