//! The representer estimator `μ̂_rep`, its debiased version `μ̂_repa`, the
//! plug-in standard error and the Wald interval.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisSpec, SieveFunction, SobolevGram};
use crate::data::{CovariateScaler, ObservationTable};
use crate::error::{Error, Result};
use crate::normal::two_sided_critical;
use crate::projection::{psi_rows, ProjectionOperator, SampleForms, TauSpec, TauValues};
use crate::solver::{self, SolverConfig, SolverResult};
use crate::tuning::GridPoint;

/// Sieve sizes and solver settings. Explicit basis specs take precedence
/// over the sizes; otherwise both bases are graded polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Size of `ψ` over `(x, z)`.
    pub q_n: Option<usize>,
    /// Size of `φ` over `(x, y)`; defaults to `q_n`.
    pub k_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<BasisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<BasisSpec>,
    pub solver: SolverConfig,
    pub alpha: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            q_n: None,
            k_n: None,
            psi: None,
            phi: None,
            solver: SolverConfig::default(),
            alpha: 0.05,
        }
    }
}

/// Default `q_n` for an input dimension `d + 1`: the affine functions.
pub fn default_sieve_size(dim: usize) -> usize {
    dim + 1
}

/// Resolved bases and Sobolev order for a dataset with `d` covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Bases {
    pub psi: BasisSpec,
    pub phi: BasisSpec,
    pub alpha0: u32,
}

impl EstimatorConfig {
    pub fn with_sizes(q_n: usize, k_n: usize) -> Self {
        Self {
            q_n: Some(q_n),
            k_n: Some(k_n),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec("alpha must lie in (0, 1)".into()));
        }
        if let (Some(q), Some(k)) = (self.q_n, self.k_n) {
            if q == 0 || k < q {
                return Err(Error::InvalidSpec(format!("need 1 <= q_n <= k_n, got q_n={q}, k_n={k}")));
            }
        }
        Ok(())
    }

    pub fn bases(&self, d: usize) -> Result<Bases> {
        let dim = d + 1;
        let q_n = self.q_n.unwrap_or_else(|| default_sieve_size(dim));
        let k_n = self.k_n.unwrap_or(q_n);
        if q_n == 0 || k_n < q_n {
            return Err(Error::InvalidSpec(format!("need 1 <= q_n <= k_n, got q_n={q_n}, k_n={k_n}")));
        }
        let psi = self.psi.clone().unwrap_or_else(|| BasisSpec::graded_polynomial(dim, q_n));
        let phi = self.phi.clone().unwrap_or_else(|| BasisSpec::graded_polynomial(dim, k_n));
        let alpha0 = self.solver.alpha0.unwrap_or(dim as u32 + 1);
        Ok(Bases { psi, phi, alpha0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub complete: usize,
    pub q_n: usize,
    pub k_n: usize,
    pub alpha0: u32,
    pub q_min: f64,
    pub c_n: f64,
    pub delta: SolverResult,
    pub h: SolverResult,
    /// Ridge added to the projection Gram matrix, if it was singular.
    pub projection_ridge: Option<f64>,
    /// True when the variance estimate was negative and clamped to zero.
    pub sigma_clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub mu_rep: f64,
    pub mu_repa: f64,
    pub r_hat: f64,
    pub sigma_hat: f64,
    /// `[lower, upper]`.
    pub ci: [f64; 2],
    pub alpha: f64,
    pub diagnostics: Diagnostics,
}

impl EstimateReport {
    pub fn ci_lower(&self) -> f64 {
        self.ci[0]
    }

    pub fn ci_upper(&self) -> f64 {
        self.ci[1]
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci[0] <= value && value <= self.ci[1]
    }
}

/// A report together with the fitted sieve functions, on the unit scale
/// given by `scaler`.
#[derive(Debug, Clone)]
pub struct Fit {
    pub report: EstimateReport,
    pub delta: SieveFunction,
    pub h: SieveFunction,
    pub scaler: CovariateScaler,
}

/// `(1/n) Σ {R_i τ_i + (1 − R_i) δ̂(X_i, Z_i)}`.
pub fn mu_rep(table: &ObservationTable, tau: &TauValues, delta_hat: &SieveFunction) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..table.n() {
        total += if table.r(i) {
            tau.get(i).ok_or(Error::InconsistentMissingness {
                row: i,
                detail: "functional undefined on a complete case",
            })?
        } else {
            delta_hat.eval(&table.xz_point(i))?
        };
    }
    Ok(total / table.n() as f64)
}

/// `Ê{f | R = 1, X_i, Y_i}` on complete cases, for `f = ψᵀθ`.
fn projected_sieve(op: &ProjectionOperator, table: &ObservationTable, f: &SieveFunction) -> Result<DVector<f64>> {
    let psi = psi_rows(table, f.basis(), op.rows())?;
    Ok(op.fitted_vec(&(psi * f.theta())))
}

/// `(1/n) Σ R_i Ê{ĥ | R=1, X_i, Y_i} ê(X_i, Y_i, δ̂)`.
pub fn r_hat(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    delta_hat: &SieveFunction,
    h_hat: &SieveFunction,
) -> Result<f64> {
    let eh = projected_sieve(op, table, h_hat)?;
    let e = crate::projection::residual_map(op, table, tau, delta_hat)?;
    let sum: f64 = op
        .rows()
        .iter()
        .zip(eh.iter())
        .map(|(&i, h)| h * e[i].expect("complete case"))
        .sum();
    Ok(sum / table.n() as f64)
}

pub fn mu_repa(mu_rep: f64, r_hat: f64) -> f64 {
    mu_rep + r_hat
}

/// The plug-in standard deviation and whether `σ̂²` had to be clamped.
pub fn sigma_hat_with_flag(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    delta_hat: &SieveFunction,
    h_hat: &SieveFunction,
) -> Result<(f64, bool)> {
    let n = table.n() as f64;
    let eh = projected_sieve(op, table, h_hat)?;
    let mut first = 0.0;
    let mut second = 0.0;
    let mut correction = 0.0;
    let mut k = 0usize;
    for i in 0..table.n() {
        let delta = delta_hat.eval(&table.xz_point(i))?;
        let v = if table.r(i) {
            let t = tau.get(i).ok_or(Error::InconsistentMissingness {
                row: i,
                detail: "functional undefined on a complete case",
            })?;
            correction += (eh[k] * (t - delta)).powi(2);
            k += 1;
            t
        } else {
            delta
        };
        first += v;
        second += v * v;
    }
    let mean = first / n;
    let var = second / n - mean * mean + correction / n;
    Ok((var.max(0.0).sqrt(), var < 0.0))
}

pub fn sigma_hat(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    delta_hat: &SieveFunction,
    h_hat: &SieveFunction,
) -> Result<f64> {
    Ok(sigma_hat_with_flag(op, table, tau, delta_hat, h_hat)?.0)
}

/// Full pipeline from a table in original units: `τ` is evaluated on the
/// original values and the basis inputs are min–max scaled.
pub fn estimate(table: &ObservationTable, tau: &TauSpec, config: &EstimatorConfig) -> Result<EstimateReport> {
    Ok(fit(table, tau, config)?.report)
}

pub fn fit(table: &ObservationTable, tau: &TauSpec, config: &EstimatorConfig) -> Result<Fit> {
    let tau_values = TauValues::evaluate(tau, table).map_err(Error::at("tau"))?;
    let scaler = CovariateScaler::fit(table).map_err(Error::at("scaling"))?;
    let scaled = scaler.apply(table).map_err(Error::at("scaling"))?;
    let (report, delta, h) = fit_scaled(&scaled, &tau_values, config)?;
    Ok(Fit {
        report,
        delta,
        h,
        scaler,
    })
}

/// The pipeline on a table whose basis inputs are already on `[0, 1]`.
pub fn fit_scaled(
    table: &ObservationTable,
    tau: &TauValues,
    config: &EstimatorConfig,
) -> Result<(EstimateReport, SieveFunction, SieveFunction)> {
    config.validate()?;
    if tau.len() != table.n() {
        return Err(Error::DimensionMismatch {
            expected: table.n(),
            got: tau.len(),
        });
    }
    let bases = config.bases(table.d())?;
    let psi = Basis::new(&bases.psi).map_err(Error::at("basis"))?;
    let op = ProjectionOperator::fit(table, &bases.phi).map_err(Error::at("projection"))?;
    let forms = SampleForms::assemble(&op, table, tau, &psi).map_err(Error::at("assembly"))?;
    let gram = SobolevGram::new(&psi, bases.alpha0);

    let solver_cfg = &config.solver;
    let (_, q_min) = solver::min_q(&forms.q, &gram, solver_cfg.k_radius).map_err(Error::at("q_min"))?;
    let c_n = solver::resolve_cn(q_min, table.n(), solver_cfg);
    let delta_res = solver::select_delta(&forms.q, &forms.m, &gram, &solver_cfg.with_cn(c_n))
        .map_err(Error::at("select_delta"))?;
    let h_res = solver::solve_h(&forms.c, &gram, solver_cfg).map_err(Error::at("solve_h"))?;

    let delta = SieveFunction::new(psi.clone(), delta_res.theta_vec())?;
    let h = SieveFunction::new(psi.clone(), h_res.theta_vec())?;

    // Everything below reuses the assembled pieces rather than re-evaluating ψ.
    let n = table.n() as f64;
    let th_d = delta.theta();
    let th_h = h.theta();
    let delta_missing = &forms.psi_missing * th_d;
    let delta_complete = &forms.psi_complete * th_d;
    let e_hat = &forms.projected_tau - &forms.projected_psi * th_d;
    let eh = &forms.projected_psi * th_h;

    let mu_rep = (forms.tau_complete.sum() + delta_missing.sum()) / n;
    let r_hat = eh.dot(&e_hat) / n;
    let mu_repa = mu_repa(mu_rep, r_hat);

    let second = forms.tau_complete.norm_squared() + delta_missing.norm_squared();
    let correction: f64 = eh
        .iter()
        .zip(forms.tau_complete.iter().zip(delta_complete.iter()))
        .map(|(h, (t, d))| (h * (t - d)).powi(2))
        .sum();
    let var = second / n - mu_rep * mu_rep + correction / n;
    if var < 0.0 {
        log::warn!("variance estimate {var:e} is negative, clamping to zero");
    }
    let sigma_hat = var.max(0.0).sqrt();
    let half = two_sided_critical(config.alpha) * sigma_hat / n.sqrt();

    let report = EstimateReport {
        mu_rep,
        mu_repa,
        r_hat,
        sigma_hat,
        ci: [mu_repa - half, mu_repa + half],
        alpha: config.alpha,
        diagnostics: Diagnostics {
            n: table.n(),
            complete: op.rows().len(),
            q_n: psi.len(),
            k_n: op.basis().len(),
            alpha0: bases.alpha0,
            q_min,
            c_n: delta_res.c_n.unwrap_or(c_n),
            delta: delta_res,
            h: h_res,
            projection_ridge: op.ridge(),
            sigma_clamped: var < 0.0,
            tuning: None,
        },
    };
    Ok((report, delta, h))
}
