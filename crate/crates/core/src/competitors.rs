//! Baseline estimators used in the simulation comparisons, and the closed
//! form of the representer for a binary outcome and binary shadow variable.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ObservationTable, Setting};
use crate::error::{Error, Result};
use crate::normal::two_sided_critical;
use crate::projection::TauValues;
use crate::quadrature::gauss_legendre;

fn expit(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `logit P(R = 1 | x, y) = θ₀ + θ_xᵀx + θ_y y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticPropensity {
    pub theta: Vec<f64>,
}

impl LogisticPropensity {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("propensity coefficients must be finite".into()));
        }
        Ok(Self { theta })
    }

    pub fn prob(&self, x: &[f64], y: f64) -> f64 {
        let d = x.len();
        let eta = self.theta[0] + x.iter().zip(&self.theta[1..=d]).map(|(a, b)| a * b).sum::<f64>() + self.theta[d + 1] * y;
        expit(eta)
    }
}

/// Starting point for the MNAR-IPW moment solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IpwInit {
    /// Known reference coefficients (simulation only).
    Truth(Vec<f64>),
    /// Each coordinate drawn independently from `U(low, high)`.
    Uniform { low: f64, high: f64 },
    Custom(Vec<f64>),
}

impl IpwInit {
    pub const UNIFORM_LOW: f64 = 0.0;
    pub const UNIFORM_HIGH: f64 = 1.0;

    pub fn uniform() -> Self {
        IpwInit::Uniform {
            low: Self::UNIFORM_LOW,
            high: Self::UNIFORM_HIGH,
        }
    }

    pub fn resolve<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Result<Vec<f64>> {
        let v = match self {
            IpwInit::Truth(v) | IpwInit::Custom(v) => v.clone(),
            IpwInit::Uniform { low, high } => {
                if !(high > low) {
                    return Err(Error::InvalidSpec("uniform init needs low < high".into()));
                }
                (0..dim).map(|_| rng.random_range(*low..*high)).collect()
            }
        };
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpwResult {
    pub estimate: f64,
    pub theta: Vec<f64>,
    pub converged: bool,
    pub moment_norm: f64,
    pub iterations: usize,
    /// Sandwich standard error of the estimate; `None` when the stacked
    /// Jacobian is singular.
    pub std_error: Option<f64>,
}

impl IpwResult {
    pub fn ci(&self, alpha: f64) -> Option<[f64; 2]> {
        let se = self.std_error?;
        let half = two_sided_critical(alpha) * se;
        Some([self.estimate - half, self.estimate + half])
    }
}

const IPW_TOL: f64 = 1e-10;
const IPW_MAX_ITER: usize = 200;

struct MomentSystem<'a> {
    table: &'a ObservationTable,
    /// `(1, x, y)` on complete cases, `None` elsewhere.
    u: Vec<Option<DVector<f64>>>,
    /// `(1, x, z)` on every row.
    g: Vec<DVector<f64>>,
}

impl<'a> MomentSystem<'a> {
    fn new(table: &'a ObservationTable) -> Self {
        let u = (0..table.n())
            .map(|i| {
                table.y(i).map(|y| {
                    let mut v = vec![1.0];
                    v.extend_from_slice(table.x_row(i));
                    v.push(y);
                    DVector::from_vec(v)
                })
            })
            .collect();
        let g = (0..table.n())
            .map(|i| {
                let mut v = vec![1.0];
                v.extend_from_slice(table.x_row(i));
                v.push(table.z(i));
                DVector::from_vec(v)
            })
            .collect();
        Self { table, u, g }
    }

    fn dim(&self) -> usize {
        self.table.d() + 2
    }

    fn pi(&self, i: usize, theta: &DVector<f64>) -> Option<f64> {
        self.u[i].as_ref().map(|u| expit(u.dot(theta)))
    }

    fn moments(&self, theta: &DVector<f64>) -> DVector<f64> {
        let p = self.dim();
        let mut m = DVector::zeros(p);
        for i in 0..self.table.n() {
            let w = self.pi(i, theta).map_or(0.0, |pi| 1.0 / pi);
            m.axpy(w - 1.0, &self.g[i], 1.0);
        }
        m / self.table.n() as f64
    }

    fn jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let p = self.dim();
        let mut j = DMatrix::zeros(p, p);
        for i in 0..self.table.n() {
            if let (Some(pi), Some(u)) = (self.pi(i, theta), &self.u[i]) {
                j.ger(-(1.0 - pi) / pi, &self.g[i], u, 1.0);
            }
        }
        j / self.table.n() as f64
    }
}

fn solve_or_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    a.clone().svd(true, true).solve(b, 1e-12).ok()
}

/// Solves the shadow-variable moment system
/// `(1/n) Σ {R_i/π(θ) − 1} (1, X_i, Z_i) = 0` by damped Newton from
/// `init`, then forms the Hájek-normalized weighted mean of `τ`.
pub fn ipw_mnar(table: &ObservationTable, tau: &TauValues, init: &[f64]) -> Result<IpwResult> {
    let sys = MomentSystem::new(table);
    let p = sys.dim();
    if init.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: init.len(),
        });
    }
    if table.complete_count() == 0 {
        return Err(Error::TooFewCompleteCases { complete: 0, needed: 1 });
    }
    let mut theta = DVector::from_column_slice(init);
    let mut m = sys.moments(&theta);
    let mut norm = m.norm();
    let mut iterations = 0;
    while norm > IPW_TOL && iterations < IPW_MAX_ITER {
        iterations += 1;
        let j = sys.jacobian(&theta);
        let Some(step) = solve_or_lstsq(&j, &(-&m)) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta + &step * t;
            let mc = sys.moments(&cand);
            let nc = mc.norm();
            if nc.is_finite() && nc < norm {
                theta = cand;
                m = mc;
                norm = nc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let converged = norm <= IPW_TOL;
    let estimate = hajek(table, tau, |i| sys.pi(i, &theta))?;
    let std_error = ipw_sandwich(&sys, tau, &theta, estimate);
    Ok(IpwResult {
        estimate,
        theta: theta.iter().copied().collect(),
        converged,
        moment_norm: norm,
        iterations,
        std_error,
    })
}

fn hajek(table: &ObservationTable, tau: &TauValues, mut pi: impl FnMut(usize) -> Option<f64>) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..table.n() {
        if let Some(p) = pi(i) {
            let t = tau.get(i).ok_or(Error::InconsistentMissingness {
                row: i,
                detail: "functional undefined on a complete case",
            })?;
            num += t / p;
            den += 1.0 / p;
        }
    }
    Ok(num / den)
}

/// Sandwich variance of the Hájek mean, stacking the propensity moments
/// with `R(τ − μ)/π`.
fn ipw_sandwich(sys: &MomentSystem<'_>, tau: &TauValues, theta: &DVector<f64>, mu: f64) -> Option<f64> {
    let p = sys.dim();
    let n = sys.table.n();
    let mut bread = DMatrix::zeros(p + 1, p + 1);
    bread.view_mut((0, 0), (p, p)).copy_from(&(sys.jacobian(theta) * n as f64));
    let mut meat = DMatrix::zeros(p + 1, p + 1);
    let mut psi = DVector::zeros(p + 1);
    for i in 0..n {
        let pi = sys.pi(i, theta);
        let w = pi.map_or(0.0, |v| 1.0 / v);
        psi.rows_mut(0, p).copy_from(&(&sys.g[i] * (w - 1.0)));
        psi[p] = match (pi, &sys.u[i]) {
            (Some(pi), Some(u)) => {
                let resid = tau.get(i)? - mu;
                let row = u.transpose() * (-resid * (1.0 - pi) / pi);
                let mut b = bread.view_mut((p, 0), (1, p));
                b += row;
                bread[(p, p)] -= 1.0 / pi;
                resid / pi
            }
            _ => 0.0,
        };
        meat.ger(1.0, &psi, &psi, 1.0);
    }
    let bread = bread / n as f64;
    let meat = meat / n as f64;
    let inv = bread.try_inverse()?;
    let v = &inv * meat * inv.transpose();
    let var = v[(p, p)] / n as f64;
    (var.is_finite() && var >= 0.0).then(|| var.sqrt())
}

/// MAR regression: OLS of `τ` on `(1, x)` among complete cases, averaged
/// over all rows.
pub fn mar_reg(table: &ObservationTable, tau: &TauValues) -> Result<f64> {
    let rows: Vec<usize> = (0..table.n()).filter(|&i| table.r(i)).collect();
    let p = table.d() + 1;
    if rows.len() < p {
        return Err(Error::TooFewCompleteCases {
            complete: rows.len(),
            needed: p,
        });
    }
    let design = |i: usize| {
        let mut v = vec![1.0];
        v.extend_from_slice(table.x_row(i));
        v
    };
    let x = DMatrix::from_fn(rows.len(), p, |k, j| design(rows[k])[j]);
    let t = tau.complete(&rows)?;
    let mut xtx = x.tr_mul(&x);
    let xty = x.tr_mul(&t);
    let beta = match xtx.clone().cholesky() {
        Some(c) => c.solve(&xty),
        None => {
            let ridge = 1e-10 * xtx.trace() / p as f64;
            for j in 0..p {
                xtx[(j, j)] += ridge;
            }
            xtx.cholesky()
                .ok_or_else(|| Error::NumericalFailure("regression design is singular".into()))?
                .solve(&xty)
        }
    };
    let total: f64 = (0..table.n())
        .map(|i| design(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    Ok(total / table.n() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarIpwResult {
    pub estimate: f64,
    pub coefficients: Vec<f64>,
    /// Complete cases whose fitted propensity was raised to the floor.
    pub clipped: usize,
}

const PROPENSITY_FLOOR: f64 = 0.01;

/// MAR inverse weighting: logistic regression of `R` on `(1, x)`, then a
/// Hájek mean over complete cases with weights `1/max(π̂, 0.01)`.
pub fn mar_ipw(table: &ObservationTable, tau: &TauValues) -> Result<MarIpwResult> {
    let n = table.n();
    let p = table.d() + 1;
    let design: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut v = vec![1.0];
            v.extend_from_slice(table.x_row(i));
            DVector::from_vec(v)
        })
        .collect();
    let frac = table.complete_count() as f64 / n as f64;
    if frac == 0.0 || frac == 1.0 {
        if frac == 0.0 {
            return Err(Error::TooFewCompleteCases { complete: 0, needed: 1 });
        }
        let est = hajek(table, tau, |_| Some(1.0))?;
        let mut coefficients = vec![0.0; p];
        coefficients[0] = f64::INFINITY;
        return Ok(MarIpwResult {
            estimate: est,
            coefficients,
            clipped: 0,
        });
    }
    let mut beta = DVector::zeros(p);
    beta[0] = (frac / (1.0 - frac)).ln();
    let loglik = |b: &DVector<f64>| -> f64 {
        (0..n)
            .map(|i| {
                let eta = design[i].dot(b);
                let log1p = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
                if table.r(i) {
                    eta - log1p
                } else {
                    -log1p
                }
            })
            .sum()
    };
    let mut ll = loglik(&beta);
    let mut converged = false;
    for _ in 0..100 {
        let mut grad = DVector::zeros(p);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let pi = expit(design[i].dot(&beta));
            let r = if table.r(i) { 1.0 } else { 0.0 };
            grad.axpy(r - pi, &design[i], 1.0);
            info.ger(pi * (1.0 - pi), &design[i], &design[i], 1.0);
        }
        let step = info
            .cholesky()
            .ok_or_else(|| Error::NonConvergence("logistic information matrix is singular".into()))?
            .solve(&grad);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let lc = loglik(&cand);
            if lc.is_finite() && lc >= ll {
                beta = cand;
                ll = lc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if step.norm() * t < 1e-12 || !moved {
            converged = moved || grad.norm() < 1e-8 * n as f64;
            break;
        }
        if grad.norm() < 1e-10 * n as f64 {
            converged = true;
            break;
        }
    }
    if !converged || beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence("MAR logistic regression".into()));
    }
    let mut clipped = 0;
    let est = hajek(table, tau, |i| {
        table.r(i).then(|| {
            let pi = expit(design[i].dot(&beta));
            if pi < PROPENSITY_FLOOR {
                clipped += 1;
                PROPENSITY_FLOOR
            } else {
                pi
            }
        })
    });
    Ok(MarIpwResult {
        estimate: est?,
        coefficients: beta.iter().copied().collect(),
        clipped,
    })
}

/// `δ₀(z)` at `z ∈ {0, 1}` for a binary outcome whose shadow variable has
/// `P(Z = 1 | Y = y) = f_y`.
pub fn binary_delta0(f0: f64, f1: f64, tau0: f64, tau1: f64) -> Result<[f64; 2]> {
    if !(f0 > 0.0 && f0 < 1.0 && f1 > 0.0 && f1 < 1.0) {
        return Err(Error::InvalidSpec("f0 and f1 must lie in (0, 1)".into()));
    }
    if f1 == f0 {
        return Err(Error::DegenerateShadow);
    }
    let at = |z: f64| (z * (tau1 - tau0) - f0 * tau1 + f1 * tau0) / (f1 - f0);
    Ok([at(0.0), at(1.0)])
}

/// Population root of the MNAR-IPW moment system for the Case II models,
/// where the working logistic propensity `expit(θ₀ + θ₁ y)` is
/// misspecified. The observed-data law is shared by both models, so the
/// root is too.
///
/// With `E(Z | Y) = Y` the moment conditions reduce to
/// `E{p(Y)/π(Y)} = 1` and `E{Y p(Y)/π(Y)} = E(Y)`.
pub fn case2_pseudo_true_theta(setting: Setting) -> Vec<f64> {
    let (p, density): (fn(f64) -> f64, fn(f64) -> f64) = match setting {
        Setting::Model2 => (|y| 2.0 * y / 3.0, |y| 6.0 * y * (1.0 - y)),
        _ => (|y| 4.0 * y * y * (1.0 - y), |_| 1.0),
    };
    let (nodes, weights) = gauss_legendre(40, 0.0, 1.0);
    let expect = |f: &dyn Fn(f64) -> f64| -> f64 {
        nodes.iter().zip(&weights).map(|(&y, &w)| w * density(y) * f(y)).sum()
    };
    let ep = expect(&|y| p(y));
    let eyp = expect(&|y| y * p(y));
    let ey = expect(&|y| y);
    let target = (ey - eyp) / (1.0 - ep);
    // Mean of Y under the weight p(y) e^{-θ₁ y}, decreasing in θ₁.
    let tilted = |t: f64| expect(&|y| y * p(y) * (-t * y).exp()) / expect(&|y| p(y) * (-t * y).exp());
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tilted(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t1 = 0.5 * (lo + hi);
    let t0 = -((1.0 - ep) / expect(&|y| p(y) * (-t1 * y).exp())).ln();
    vec![t0, t1]
}
