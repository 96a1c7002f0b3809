//! Estimation of mean functionals `E{τ(X, Y)}` when the outcome `Y` is
//! missing not at random but a fully observed shadow variable `Z` is
//! available.
//!
//! The representer `δ₀(X, Z)`, which satisfies
//! `E{δ₀(X, Z) | R = 1, X, Y} = τ(X, Y)`, is estimated by constrained sieve
//! minimum distance ([`solver::select_delta`]); the plug-in estimate
//! `μ̂_rep` is then debiased with a second sieve fit ([`solver::solve_h`])
//! and equipped with a Wald interval ([`estimator::estimate`]).
//!
//! ```no_run
//! use shadowmean::{estimate, EstimatorConfig, ScenarioSpec, Setting, TauSpec};
//!
//! let data = ScenarioSpec::new(Setting::Model1, 1000, 7).generate().unwrap();
//! let report = estimate(&data.table, &TauSpec::Outcome, &EstimatorConfig::default()).unwrap();
//! println!("{} [{}, {}]", report.mu_repa, report.ci_lower(), report.ci_upper());
//! ```

pub mod basis;
pub mod competitors;
pub mod data;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod normal;
mod parallel;
pub mod projection;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod tuning;

pub use basis::{eval_basis, eval_basis_deriv, sobolev_gram, Basis, BasisFamily, BasisSpec, SieveFunction, SobolevGram};
pub use competitors::{binary_delta0, ipw_mnar, mar_ipw, mar_reg, IpwInit, IpwResult, LogisticPropensity};
pub use data::{
    apply_scaler, fit_scaler, generate, load_csv, read_csv, save_csv, write_csv, Case, CovariateScaler, CsvSchema,
    Missingness, ObservationTable, ScenarioSpec, Setting, TruthTable,
};
pub use error::{Error, Result};
pub use estimator::{estimate, fit, mu_rep, mu_repa, r_hat, sigma_hat, EstimateReport, EstimatorConfig, Fit};
pub use montecarlo::{
    run_experiment, run_experiment_with_threads, EstimatorKind, ExperimentOutput, ExperimentPlan, MonteCarloSummary,
    RepRecord,
};
pub use parallel::with_threads;
pub use projection::{
    assemble_cn, assemble_mn, assemble_qn, fit_projection, residual_map, ProjectionOperator, QuadraticForm,
    SampleForms, TauSpec, TauValues,
};
pub use solver::{min_q, resolve_cn, select_delta, solve_h, CnRule, SolverConfig, SolverResult, SolverStatus};
pub use tuning::{cross_validate, estimate_tuned, GridPoint, TuningGrid, TuningOutcome};
