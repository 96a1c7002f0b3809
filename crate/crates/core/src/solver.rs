//! The two constrained quadratic problems behind the estimator:
//!
//! * `δ̂₀`: minimize `M_n` subject to `Q_n ≤ c_n` and `θᵀHθ ≤ K²`;
//! * `ĥ`: minimize `C_n` subject to `θᵀHθ ≤ K²`.
//!
//! Both are solved in coordinates whitened by the Cholesky factor of `H`,
//! where the Sobolev ball becomes a Euclidean ball. The single-constraint
//! problem is a trust-region subproblem solved through an eigendecomposition
//! and bisection on the multiplier; the two-constraint problem adds an outer
//! bisection on the multiplier of `Q_n`, whose constraint value is monotone
//! along the dual path.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::basis::SobolevGram;
use crate::error::{Error, Result};
use crate::projection::QuadraticForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CnRule {
    /// `c_n` is taken from the configuration as is.
    Absolute,
    /// `c_n = q_min + C₀ · n^(-2/3)`.
    QMinPlusRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Slack level for the absolute rule.
    pub c_n: f64,
    /// Scale `C₀` for the rate rule.
    pub c0: f64,
    pub c_n_rule: CnRule,
    /// Sobolev radius `K`.
    #[serde(rename = "K")]
    pub k_radius: f64,
    /// Sobolev derivative order; `None` picks `input_dim + 1`.
    pub alpha0: Option<u32>,
    pub kkt_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            c_n: 0.0,
            c0: 1.0,
            c_n_rule: CnRule::QMinPlusRate,
            k_radius: 10.0,
            alpha0: None,
            kkt_tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("solver config: {what}")));
        if !(self.c_n >= 0.0) {
            return bad("c_n must be nonnegative");
        }
        if !(self.c0 >= 0.0) {
            return bad("C0 must be nonnegative");
        }
        if !(self.k_radius > 0.0) {
            return bad("K must be positive");
        }
        if !(self.kkt_tol > 0.0) {
            return bad("kkt_tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        Ok(())
    }

    /// A copy using the absolute rule with slack `c_n`.
    pub fn with_cn(&self, c_n: f64) -> Self {
        Self {
            c_n,
            c_n_rule: CnRule::Absolute,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    FeasibilityRelaxed,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub theta: Vec<f64>,
    pub objective: f64,
    /// `Q_n` at the solution (selection problem only).
    pub q_value: Option<f64>,
    /// The slack level actually enforced (selection problem only).
    pub c_n: Option<f64>,
    pub sobolev_norm_sq: f64,
    /// `(λ_Q, λ_H)`.
    pub multipliers: (f64, f64),
    pub status: SolverStatus,
    /// Norm of the Lagrangian gradient at the solution.
    pub kkt_residual: f64,
    /// Largest `λ · |constraint − bound|` over active multipliers.
    pub complementarity: f64,
    pub iterations: usize,
}

impl SolverResult {
    pub fn theta_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.theta)
    }
}

/// Sobolev metric in factored form, `H = L Lᵀ`.
struct Whitening {
    chol: Cholesky<f64, Dyn>,
    h: DMatrix<f64>,
}

impl Whitening {
    fn new(gram: &SobolevGram) -> Result<Self> {
        let h = 0.5 * (&gram.h + gram.h.transpose());
        let q = h.nrows();
        let trace = h.trace().abs().max(f64::MIN_POSITIVE);
        if let Some(chol) = h.clone().cholesky() {
            return Ok(Self { chol, h });
        }
        let mut shift = 1e-12;
        while shift <= 1e-6 {
            let hs = &h + DMatrix::identity(q, q) * (shift * trace);
            if let Some(chol) = hs.clone().cholesky() {
                return Ok(Self { chol, h: hs });
            }
            shift *= 10.0;
        }
        Err(Error::NumericalFailure("Sobolev Gram matrix could not be factorized".into()))
    }

    /// `L⁻¹ X L⁻ᵀ`.
    fn matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.chol.l();
        let left = l.solve_lower_triangular(x).expect("triangular factor is nonsingular");
        let both = l
            .solve_lower_triangular(&left.transpose())
            .expect("triangular factor is nonsingular");
        0.5 * (&both + both.transpose())
    }

    /// `L⁻¹ v`.
    fn vector(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .solve_lower_triangular(v)
            .expect("triangular factor is nonsingular")
    }

    /// `θ = L⁻ᵀ u`.
    fn back(&self, u: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l()
            .tr_solve_lower_triangular(u)
            .expect("triangular factor is nonsingular")
    }
}

/// Solution of `min uᵀBu − 2gᵀu` over `‖u‖ ≤ radius` for PSD `B`.
struct BallSolution {
    u: DVector<f64>,
    lambda: f64,
}

fn ball_minimize(b: &DMatrix<f64>, g: &DVector<f64>, radius: f64) -> Result<BallSolution> {
    let q = b.nrows();
    // Fast path: positive definite with the ball inactive.
    if let Some(chol) = b.clone().cholesky() {
        let u = chol.solve(g);
        if u.iter().all(|v| v.is_finite()) && u.norm() <= radius {
            return Ok(BallSolution { u, lambda: 0.0 });
        }
    }
    let eig = b
        .clone()
        .try_symmetric_eigen(1e-15, 100_000)
        .ok_or_else(|| Error::NumericalFailure("eigendecomposition did not converge".into()))?;
    let d: Vec<f64> = eig.eigenvalues.iter().map(|v| v.max(0.0)).collect();
    let beta = eig.eigenvectors.tr_mul(g);
    let scale = d.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let beta_norm = beta.norm();
    let null_tol = 1e-14 * scale;

    let norm_at = |lambda: f64| -> f64 {
        (0..q)
            .map(|i| {
                let den = d[i] + lambda;
                if den <= 0.0 {
                    0.0
                } else {
                    (beta[i] / den).powi(2)
                }
            })
            .sum::<f64>()
            .sqrt()
    };
    let assemble = |lambda: f64, drop_null: bool| -> DVector<f64> {
        let coef = DVector::from_iterator(
            q,
            (0..q).map(|i| {
                let den = d[i] + lambda;
                if (drop_null && d[i] <= null_tol) || den <= 0.0 {
                    0.0
                } else {
                    beta[i] / den
                }
            }),
        );
        &eig.eigenvectors * coef
    };

    let unbounded = (0..q).any(|i| d[i] <= null_tol && beta[i].abs() > 1e-12 * beta_norm);
    if !unbounded {
        let u0 = assemble(0.0, true);
        if u0.norm() <= radius {
            return Ok(BallSolution { u: u0, lambda: 0.0 });
        }
    }
    // ‖u(λ)‖ is decreasing in λ and ‖u(λ)‖ ≤ ‖β‖/λ.
    let mut lo = 0.0f64;
    let mut hi = (beta_norm / radius).max(f64::MIN_POSITIVE);
    while norm_at(hi) > radius {
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = assemble(hi, false);
    Ok(BallSolution { u, lambda: hi })
}

/// Minimizer of `Q_n` over the Sobolev ball, with its value.
pub fn min_q(q_form: &QuadraticForm, gram: &SobolevGram, k_radius: f64) -> Result<(DVector<f64>, f64)> {
    let w = Whitening::new(gram)?;
    let sol = ball_minimize(&w.matrix(&q_form.a), &w.vector(&q_form.b), k_radius)?;
    let theta = w.back(&sol.u);
    let value = q_form.eval(&theta).max(0.0);
    Ok((theta, value))
}

/// `c_n` under the configured rule. Never below `q_min`.
pub fn resolve_cn(q_min: f64, n: usize, config: &SolverConfig) -> f64 {
    match config.c_n_rule {
        CnRule::Absolute => config.c_n,
        CnRule::QMinPlusRate => q_min + config.c0 * (n as f64).powf(-2.0 / 3.0),
    }
    .max(q_min)
}

/// Tie-breaking ridge on the selection objective, relative to its scale.
fn selection_ridge(m_form: &QuadraticForm, gram: &SobolevGram) -> f64 {
    let tr = m_form.a.trace();
    1e-12 * if tr > 0.0 { tr } else { gram.h.trace() }
}

/// `θ̂₀ = argmin θᵀMθ` subject to `Q_n(θ) ≤ c_n` and `θᵀHθ ≤ K²`, where
/// `c_n` is `config.c_n` (already resolved). When no point of the ball
/// satisfies the slack constraint, `c_n` is raised just above the
/// smallest attainable `Q_n` and the status says so.
pub fn select_delta(
    q_form: &QuadraticForm,
    m_form: &QuadraticForm,
    gram: &SobolevGram,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    let dim = q_form.dim();
    if m_form.dim() != dim || gram.h.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m_form.dim().min(gram.h.nrows()),
        });
    }
    let w = Whitening::new(gram)?;
    let ridge = selection_ridge(m_form, gram);
    let objective = &m_form.a + DMatrix::identity(dim, dim) * ridge;
    let m_w = w.matrix(&objective);
    let a_w = w.matrix(&q_form.a);
    let b_w = w.vector(&q_form.b);
    let radius = config.k_radius;
    let k_sq = radius * radius;

    let counter = std::cell::Cell::new(0usize);
    let solve_at = |lambda1: f64| -> Result<(DVector<f64>, f64, f64)> {
        counter.set(counter.get() + 1);
        let sol = ball_minimize(&(&m_w + &a_w * lambda1), &(&b_w * lambda1), radius)?;
        let theta = w.back(&sol.u);
        let qv = q_form.eval(&theta);
        Ok((theta, sol.lambda, qv))
    };

    let mut c_n = config.c_n;
    let mut status = SolverStatus::Optimal;
    let finish = |theta: DVector<f64>, l1: f64, l2: f64, c_n: f64, status: SolverStatus, iterations: usize| {
        let hq = w.h.clone() * &theta;
        let norm_sq = theta.dot(&hq);
        let q_value = q_form.eval(&theta);
        let grad = 2.0 * (&objective * &theta + &q_form.a * &theta * l1 + hq * l2 - &q_form.b * l1);
        let complementarity = (l1 * (q_value - c_n).abs()).max(l2 * (norm_sq - k_sq).abs());
        SolverResult {
            objective: theta.dot(&(&m_form.a * &theta)),
            theta: theta.iter().copied().collect(),
            q_value: Some(q_value),
            c_n: Some(c_n),
            sobolev_norm_sq: norm_sq,
            multipliers: (l1, l2),
            status,
            kkt_residual: grad.norm(),
            complementarity,
            iterations,
        }
    };

    // θ = 0 minimizes M and lies in the ball.
    if q_form.c <= c_n {
        return Ok(finish(DVector::zeros(dim), 0.0, 0.0, c_n, status, 0));
    }
    let (_, q_min) = min_q(q_form, gram, radius)?;
    if q_min >= c_n * (1.0 - 1e-12) {
        c_n = q_min * (1.0 + 1e-3) + 1e-12;
        status = SolverStatus::FeasibilityRelaxed;
        if q_form.c <= c_n {
            return Ok(finish(DVector::zeros(dim), 0.0, 0.0, c_n, status, 0));
        }
    }

    // Q along the dual path decreases from Q(0) = c towards q_min.
    let mut hi = 1.0f64;
    let mut best = solve_at(hi)?;
    while best.2 > c_n {
        if counter.get() >= config.max_iter || !hi.is_finite() {
            let (theta, l2, _) = best;
            return Ok(finish(theta, hi, l2, c_n, SolverStatus::MaxIter, counter.get()));
        }
        hi *= 4.0;
        best = solve_at(hi)?;
    }
    let mut lo = hi / 4.0;
    loop {
        if lo < 1e-300 {
            lo = 0.0;
            break;
        }
        let (_, _, q_lo) = solve_at(lo)?;
        if q_lo > c_n {
            break;
        }
        hi = lo;
        best = solve_at(hi)?;
        lo /= 4.0;
    }
    // Geometric bisection once the lower end is positive.
    while counter.get() < config.max_iter {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { 0.5 * hi };
        if mid <= lo || mid >= hi || (lo > 0.0 && hi / lo - 1.0 <= 1e-15) {
            break;
        }
        let trial = solve_at(mid)?;
        if trial.2 > c_n {
            lo = mid;
        } else {
            hi = mid;
            let close = (trial.2 - c_n).abs() <= 1e-15 * c_n.max(f64::MIN_POSITIVE);
            best = trial;
            if close {
                break;
            }
        }
    }
    if counter.get() >= config.max_iter {
        status = SolverStatus::MaxIter;
    }
    let (theta, l2, _) = best;
    Ok(finish(theta, hi, l2, c_n, status, counter.get()))
}

/// `ĥ = argmin C_n(θ)` over `θᵀHθ ≤ K²`.
pub fn solve_h(c_form: &QuadraticForm, gram: &SobolevGram, config: &SolverConfig) -> Result<SolverResult> {
    config.validate()?;
    let w = Whitening::new(gram)?;
    let sol = ball_minimize(&w.matrix(&c_form.a), &w.vector(&c_form.b), config.k_radius)?;
    let theta = w.back(&sol.u);
    let hq = &w.h * &theta;
    let norm_sq = theta.dot(&hq);
    let grad = 2.0 * (&c_form.a * &theta - &c_form.b + hq * sol.lambda);
    let k_sq = config.k_radius * config.k_radius;
    Ok(SolverResult {
        objective: c_form.eval(&theta),
        theta: theta.iter().copied().collect(),
        q_value: None,
        c_n: None,
        sobolev_norm_sq: norm_sq,
        multipliers: (0.0, sol.lambda),
        status: SolverStatus::Optimal,
        kkt_residual: grad.norm(),
        complementarity: sol.lambda * (norm_sq - k_sq).abs(),
        iterations: 1,
    })
}
