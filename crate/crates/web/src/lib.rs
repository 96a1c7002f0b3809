//! Browser bindings for the demo page in `www/`.
//!
//! Each operation takes a JSON request and returns a JSON response. The
//! `*_json` functions are plain Rust so they can be tested natively; the
//! `#[wasm_bindgen]` exports only convert errors.

use serde::{Deserialize, Serialize};
use shadowmean::{
    estimate, fit, run_experiment, EstimatorConfig, EstimatorKind, ExperimentPlan, ScenarioSpec, Setting, TauSpec,
};
use wasm_bindgen::prelude::*;

fn default_setting() -> Setting {
    Setting::Model1
}

fn default_n() -> usize {
    1000
}

fn default_c0() -> f64 {
    0.01
}

fn default_k() -> f64 {
    10.0
}

fn default_size() -> usize {
    3
}

/// A Case II dataset and the estimator settings used on it.
#[derive(Debug, Clone, Deserialize)]
pub struct DataRequest {
    #[serde(default = "default_setting")]
    pub setting: Setting,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_size")]
    pub q_n: usize,
    #[serde(default = "default_size")]
    pub k_n: usize,
    #[serde(default = "default_c0", rename = "C0")]
    pub c0: f64,
    #[serde(default = "default_k", rename = "K")]
    pub k_radius: f64,
}

impl DataRequest {
    fn config(&self, c0: f64) -> EstimatorConfig {
        let mut cfg = EstimatorConfig::with_sizes(self.q_n, self.k_n);
        cfg.solver.c0 = c0;
        cfg.solver.k_radius = self.k_radius;
        cfg
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResponse {
    pub mu_true: f64,
    pub mu_rep: f64,
    pub mu_repa: f64,
    pub ci: [f64; 2],
    pub missing_fraction: f64,
    /// Covariate values (original units) at which the curve is drawn;
    /// empty for Case II, which has no covariates.
    pub x_at: Vec<f64>,
    pub curve_z: Vec<f64>,
    pub curve_delta: Vec<f64>,
    /// Responders' `(z, y)` pairs, at most 400.
    pub observed: Vec<[f64; 2]>,
}

const CURVE_POINTS: usize = 101;

/// Fits one dataset and traces `z ↦ δ̂(x, z)` at the median covariates.
pub fn fit_curve_json(request: &str) -> Result<String, String> {
    let req: DataRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let spec = ScenarioSpec::new(req.setting, req.n, req.seed);
    spec.validate().map_err(|e| e.to_string())?;
    let truth = spec.generate().map_err(|e| e.to_string())?;
    let t = &truth.table;
    let f = fit(t, &TauSpec::Outcome, &req.config(req.c0)).map_err(|e| e.to_string())?;

    let d = t.d();
    let mut xs: Vec<Vec<f64>> = (0..d).map(|j| (0..t.n()).map(|i| t.x_row(i)[j]).collect()).collect();
    let medians: Vec<f64> = xs
        .iter_mut()
        .map(|col| {
            col.sort_by(f64::total_cmp);
            col[col.len() / 2]
        })
        .collect();
    let scaled_x: Vec<f64> = medians
        .iter()
        .zip(&f.scaler.x)
        .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
        .collect();
    let (zlo, zhi) = f.scaler.z;
    let mut curve_z = Vec::with_capacity(CURVE_POINTS);
    let mut curve_delta = Vec::with_capacity(CURVE_POINTS);
    for k in 0..CURVE_POINTS {
        let u = k as f64 / (CURVE_POINTS - 1) as f64;
        let mut point = scaled_x.clone();
        point.push(u);
        curve_z.push(zlo + u * (zhi - zlo));
        curve_delta.push(f.delta.eval(&point).map_err(|e| e.to_string())?);
    }
    let observed = (0..t.n())
        .filter_map(|i| t.y(i).map(|y| [t.z(i), y]))
        .take(400)
        .collect();
    let response = FitResponse {
        mu_true: truth.mu_true,
        mu_rep: f.report.mu_rep,
        mu_repa: f.report.mu_repa,
        ci: [f.report.ci_lower(), f.report.ci_upper()],
        missing_fraction: t.missing_fraction(),
        x_at: medians,
        curve_z,
        curve_delta,
        observed,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

fn default_reps() -> usize {
    100
}

fn default_estimators() -> Vec<EstimatorKind> {
    vec![EstimatorKind::Rep, EstimatorKind::RepDb, EstimatorKind::MarReg]
}

#[derive(Debug, Clone, Deserialize)]
pub struct MonteCarloRequest {
    #[serde(flatten)]
    pub data: DataRequest,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorKind>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Distribution {
    pub estimator: EstimatorKind,
    pub bias: f64,
    pub sd: f64,
    pub cp: Option<f64>,
    pub failures: usize,
    pub estimates: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloResponse {
    pub mu_true: f64,
    pub reps: usize,
    pub distributions: Vec<Distribution>,
}

/// Sampling distribution of each estimator over `reps` datasets.
pub fn monte_carlo_json(request: &str) -> Result<String, String> {
    let req: MonteCarloRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let spec = ScenarioSpec::new(req.data.setting, req.data.n, 0);
    let mut plan = ExperimentPlan::new(spec, req.reps, req.data.seed);
    plan.estimators = req.estimators.clone();
    plan.config = req.data.config(req.data.c0);
    plan.tuning = None;
    let out = run_experiment(&plan).map_err(|e| e.to_string())?;
    let distributions = out
        .summary
        .rows
        .iter()
        .map(|row| Distribution {
            estimator: row.estimator,
            bias: row.bias,
            sd: row.sd,
            cp: row.cp,
            failures: row.failures,
            estimates: out
                .records
                .iter()
                .filter(|r| r.estimator == row.estimator && !r.failed())
                .map(|r| r.estimate)
                .collect(),
        })
        .collect();
    let response = MonteCarloResponse {
        mu_true: out.summary.mu_true,
        reps: req.reps,
        distributions,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

fn default_c0_path() -> Vec<f64> {
    vec![0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]
}

#[derive(Debug, Clone, Deserialize)]
pub struct DebiasRequest {
    #[serde(flatten)]
    pub data: DataRequest,
    #[serde(default = "default_c0_path", rename = "C0_values")]
    pub c0_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DebiasPoint {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub mu_rep: f64,
    pub mu_repa: f64,
    pub r_hat: f64,
    pub ci: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct DebiasResponse {
    pub mu_true: f64,
    pub path: Vec<DebiasPoint>,
}

/// `μ̂_rep` and `μ̂_repa` on one dataset as the slack scale `C₀` varies.
pub fn debias_path_json(request: &str) -> Result<String, String> {
    let req: DebiasRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if req.c0_values.is_empty() {
        return Err("C0_values must not be empty".into());
    }
    let spec = ScenarioSpec::new(req.data.setting, req.data.n, req.data.seed);
    spec.validate().map_err(|e| e.to_string())?;
    let truth = spec.generate().map_err(|e| e.to_string())?;
    let path = req
        .c0_values
        .iter()
        .map(|&c0| {
            let r = estimate(&truth.table, &TauSpec::Outcome, &req.data.config(c0)).map_err(|e| e.to_string())?;
            Ok(DebiasPoint {
                c0,
                mu_rep: r.mu_rep,
                mu_repa: r.mu_repa,
                r_hat: r.r_hat,
                ci: [r.ci_lower(), r.ci_upper()],
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    let response = DebiasResponse {
        mu_true: truth.mu_true,
        path,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn fit_curve(request: &str) -> Result<String, JsError> {
    fit_curve_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn monte_carlo(request: &str) -> Result<String, JsError> {
    monte_carlo_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn debias_path(request: &str) -> Result<String, JsError> {
    debias_path_json(request).map_err(|e| JsError::new(&e))
}
