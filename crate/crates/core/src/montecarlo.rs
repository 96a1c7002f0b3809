//! Replication driver: draws datasets, runs the requested estimators and
//! summarizes bias, Monte Carlo SD and interval coverage.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::competitors::{ipw_mnar, mar_ipw, mar_reg, IpwInit};
use crate::data::{CovariateScaler, ScenarioSpec};
use crate::error::{Error, Result};
use crate::estimator::{fit_scaled, EstimatorConfig};
use crate::parallel::{map_indexed, with_threads};
use crate::projection::{TauSpec, TauValues};
use crate::rng::{self, derive_seed, Purpose};
use crate::solver::SolverStatus;
use crate::tuning::{cross_validate, GridPoint, TuningGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "REP")]
    Rep,
    #[serde(rename = "REP-DB")]
    RepDb,
    #[serde(rename = "IPW-true")]
    IpwTrue,
    #[serde(rename = "IPW-uniform")]
    IpwUniform,
    #[serde(rename = "marREG")]
    MarReg,
    #[serde(rename = "marIPW")]
    MarIpw,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 6] = [
        EstimatorKind::Rep,
        EstimatorKind::RepDb,
        EstimatorKind::IpwTrue,
        EstimatorKind::IpwUniform,
        EstimatorKind::MarReg,
        EstimatorKind::MarIpw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Rep => "REP",
            EstimatorKind::RepDb => "REP-DB",
            EstimatorKind::IpwTrue => "IPW-true",
            EstimatorKind::IpwUniform => "IPW-uniform",
            EstimatorKind::MarReg => "marREG",
            EstimatorKind::MarIpw => "marIPW",
        }
    }

    /// Whether the estimator reports a confidence interval.
    pub fn has_ci(self) -> bool {
        matches!(self, EstimatorKind::RepDb | EstimatorKind::IpwTrue | EstimatorKind::IpwUniform)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "rep" => EstimatorKind::Rep,
            "rep-db" | "repdb" => EstimatorKind::RepDb,
            "ipw-true" | "ipw" => EstimatorKind::IpwTrue,
            "ipw-uniform" => EstimatorKind::IpwUniform,
            "marreg" => EstimatorKind::MarReg,
            "maripw" => EstimatorKind::MarIpw,
            _ => return Err(Error::InvalidSpec(format!("unknown estimator `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    /// Template scenario; its seed is ignored in favour of `base_seed`.
    pub scenario: ScenarioSpec,
    pub reps: usize,
    pub estimators: Vec<EstimatorKind>,
    pub alpha: f64,
    pub tau: TauSpec,
    /// Fixed estimator settings, or the base for pilot tuning.
    pub config: EstimatorConfig,
    /// When set, tune once on a pilot dataset and use the choice for every
    /// replication.
    pub tuning: Option<TuningGrid>,
    pub ipw_uniform: IpwInit,
    pub base_seed: u64,
}

impl ExperimentPlan {
    /// All estimators, pilot tuning over [`TuningGrid::default_for`].
    pub fn new(scenario: ScenarioSpec, reps: usize, base_seed: u64) -> Self {
        let grid = TuningGrid::default_for(scenario.covariate_dim() + 1);
        Self {
            scenario,
            reps,
            estimators: EstimatorKind::ALL.to_vec(),
            alpha: 0.05,
            tau: TauSpec::Outcome,
            config: EstimatorConfig::default(),
            tuning: Some(grid),
            ipw_uniform: IpwInit::uniform(),
            base_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.reps == 0 {
            return Err(Error::InvalidSpec("reps must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidSpec("no estimators requested".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec("alpha must lie in (0, 1)".into()));
        }
        if let Some(g) = &self.tuning {
            g.validate()?;
        }
        self.config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub estimator: EstimatorKind,
    /// `NaN` when the estimator failed.
    pub estimate: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub converged: bool,
}

impl RepRecord {
    pub fn failed(&self) -> bool {
        !self.estimate.is_finite()
    }

    pub fn covers(&self, value: f64) -> Option<bool> {
        Some(self.ci_lower? <= value && value <= self.ci_upper?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: EstimatorKind,
    pub bias: f64,
    pub sd: f64,
    pub cp: Option<f64>,
    pub mean_ci_width: Option<f64>,
    pub failures: usize,
    /// Replications that entered the aggregates.
    pub used: usize,
    /// True when fewer than two replications were usable, so `sd` is 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mu_true: f64,
    pub reps: usize,
    pub rows: Vec<EstimatorSummary>,
    /// Grid point chosen on the pilot dataset, if tuning was requested.
    pub tuning: Option<GridPoint>,
}

impl MonteCarloSummary {
    pub fn get(&self, kind: EstimatorKind) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator == kind)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: MonteCarloSummary,
    pub records: Vec<RepRecord>,
    pub config: EstimatorConfig,
}

fn failed(rep: usize, estimator: EstimatorKind) -> RepRecord {
    RepRecord {
        rep,
        estimator,
        estimate: f64::NAN,
        ci_lower: None,
        ci_upper: None,
        converged: false,
    }
}

/// Runs one replication; estimator failures become `NaN` records.
fn run_rep(plan: &ExperimentPlan, config: &EstimatorConfig, rep: usize) -> Vec<RepRecord> {
    let spec = plan.scenario.with_seed(derive_seed(plan.base_seed, rep as u64, Purpose::Data));
    let Ok(truth) = spec.generate() else {
        return plan.estimators.iter().map(|&k| failed(rep, k)).collect();
    };
    let table = &truth.table;
    let tau = TauValues::evaluate(&plan.tau, table);
    let wants = |k: EstimatorKind| plan.estimators.contains(&k);

    let rep_fit = (wants(EstimatorKind::Rep) || wants(EstimatorKind::RepDb))
        .then(|| {
            let tau = tau.as_ref().map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let scaled = CovariateScaler::fit(table)?.apply(table)?;
            fit_scaled(&scaled, tau, config)
        })
        .and_then(|r| r.ok());

    let mut out = Vec::with_capacity(plan.estimators.len());
    for &kind in &plan.estimators {
        let record = match kind {
            EstimatorKind::Rep => rep_fit.as_ref().map(|(r, _, _)| RepRecord {
                rep,
                estimator: kind,
                estimate: r.mu_rep,
                ci_lower: None,
                ci_upper: None,
                converged: r.diagnostics.delta.status != SolverStatus::MaxIter,
            }),
            EstimatorKind::RepDb => rep_fit.as_ref().map(|(r, _, _)| RepRecord {
                rep,
                estimator: kind,
                estimate: r.mu_repa,
                ci_lower: Some(r.ci_lower()),
                ci_upper: Some(r.ci_upper()),
                converged: r.diagnostics.delta.status != SolverStatus::MaxIter,
            }),
            EstimatorKind::IpwTrue | EstimatorKind::IpwUniform => (|| {
                let tau = tau.as_ref().ok()?;
                let init = if kind == EstimatorKind::IpwTrue {
                    IpwInit::Truth(spec.propensity_reference())
                } else {
                    plan.ipw_uniform.clone()
                };
                let mut rng = rng::stream(derive_seed(plan.base_seed, rep as u64, Purpose::IpwInit));
                let start = init.resolve(table.d() + 2, &mut rng).ok()?;
                let res = ipw_mnar(table, tau, &start).ok()?;
                let ci = res.ci(plan.alpha);
                Some(RepRecord {
                    rep,
                    estimator: kind,
                    estimate: res.estimate,
                    ci_lower: ci.map(|c| c[0]),
                    ci_upper: ci.map(|c| c[1]),
                    converged: res.converged,
                })
            })(),
            EstimatorKind::MarReg => tau.as_ref().ok().and_then(|tau| mar_reg(table, tau).ok()).map(|e| RepRecord {
                rep,
                estimator: kind,
                estimate: e,
                ci_lower: None,
                ci_upper: None,
                converged: true,
            }),
            EstimatorKind::MarIpw => tau.as_ref().ok().and_then(|tau| mar_ipw(table, tau).ok()).map(|e| RepRecord {
                rep,
                estimator: kind,
                estimate: e.estimate,
                ci_lower: None,
                ci_upper: None,
                converged: true,
            }),
        };
        out.push(record.unwrap_or_else(|| failed(rep, kind)));
    }
    out
}

/// Aggregates per-rep records for one estimator.
pub fn summarize(records: &[RepRecord], kind: EstimatorKind, mu_true: f64) -> EstimatorSummary {
    let mine: Vec<&RepRecord> = records.iter().filter(|r| r.estimator == kind).collect();
    let used: Vec<&RepRecord> = mine.iter().copied().filter(|r| !r.failed()).collect();
    let m = used.len();
    let mean = used.iter().map(|r| r.estimate).sum::<f64>() / m as f64;
    let sd = if m >= 2 {
        (used.iter().map(|r| (r.estimate - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt()
    } else {
        0.0
    };
    let with_ci: Vec<&RepRecord> = used.iter().copied().filter(|r| r.ci_lower.is_some()).collect();
    let (cp, width) = if kind.has_ci() && !with_ci.is_empty() {
        let k = with_ci.len() as f64;
        let covered = with_ci.iter().filter(|r| r.covers(mu_true) == Some(true)).count() as f64;
        let width = with_ci
            .iter()
            .map(|r| r.ci_upper.unwrap() - r.ci_lower.unwrap())
            .sum::<f64>()
            / k;
        (Some(covered / k), Some(width))
    } else {
        (None, None)
    };
    EstimatorSummary {
        estimator: kind,
        bias: mean - mu_true,
        sd,
        cp,
        mean_ci_width: width,
        failures: mine.len() - m,
        used: m,
        degenerate: m < 2,
    }
}

/// Runs the plan on the global thread pool (or serially without the
/// `parallel` feature).
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutput> {
    plan.validate()?;
    let mut config = plan.config.clone();
    config.alpha = plan.alpha;
    let mut chosen = None;
    if let Some(grid) = &plan.tuning {
        let pilot = plan
            .scenario
            .with_seed(derive_seed(plan.base_seed, 0, Purpose::Pilot))
            .generate()?;
        let outcome = cross_validate(&pilot.table, &plan.tau, grid, &config).map_err(Error::at("pilot tuning"))?;
        config = outcome.chosen.apply(&config);
        chosen = Some(outcome.chosen);
    }
    let records: Vec<RepRecord> = map_indexed(plan.reps, |rep| run_rep(plan, &config, rep))
        .into_iter()
        .flatten()
        .collect();
    let mu_true = plan.scenario.mu_true();
    let rows = plan.estimators.iter().map(|&k| summarize(&records, k, mu_true)).collect();
    Ok(ExperimentOutput {
        summary: MonteCarloSummary {
            mu_true,
            reps: plan.reps,
            rows,
            tuning: chosen,
        },
        records,
        config,
    })
}

/// [`run_experiment`] on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(plan: &ExperimentPlan, threads: Option<usize>) -> Result<ExperimentOutput> {
    with_threads(threads, || run_experiment(plan))?
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => "NA".to_string(),
    }
}

/// `rep,estimator,estimate,ci_lower,ci_upper,converged`.
pub fn write_reps_csv<W: Write>(records: &[RepRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rep", "estimator", "estimate", "ci_lower", "ci_upper", "converged"])?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            r.estimator.to_string(),
            cell(Some(r.estimate)),
            cell(r.ci_lower),
            cell(r.ci_upper),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `estimator,bias,sd,cp,mean_ci_width,failures`.
pub fn write_summary_csv<W: Write>(summary: &MonteCarloSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["estimator", "bias", "sd", "cp", "mean_ci_width", "failures"])?;
    for s in &summary.rows {
        w.write_record([
            s.estimator.to_string(),
            cell(Some(s.bias)),
            cell(Some(s.sd)),
            cell(s.cp),
            cell(s.mean_ci_width),
            s.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
