//! Series estimation of conditional expectations given `(R = 1, X, Y)` and
//! the sample criteria written as explicit quadratic forms in the sieve
//! coefficients.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisSpec, SieveFunction};
use crate::data::ObservationTable;
use crate::error::{Error, Result};

/// The functional `τ(X, Y)` whose mean is estimated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TauSpec {
    /// `τ = Y`.
    Outcome,
    /// `τ = X_j · Y` with 1-based `j`.
    CovariateTimesOutcome(usize),
    /// Values read from a named table column.
    Column(String),
}

impl FromStr for TauSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "y" {
            return Ok(TauSpec::Outcome);
        }
        if let Some(j) = s.strip_prefix("xj_y:") {
            let j: usize = j
                .parse()
                .map_err(|_| Error::InvalidSpec(format!("bad covariate index in `{s}`")))?;
            if j == 0 {
                return Err(Error::InvalidSpec("covariate index is 1-based".into()));
            }
            return Ok(TauSpec::CovariateTimesOutcome(j));
        }
        if let Some(name) = s.strip_prefix("col:") {
            if !name.is_empty() {
                return Ok(TauSpec::Column(name.to_string()));
            }
        }
        Err(Error::InvalidSpec(format!(
            "unknown functional `{s}` (expected y, xj_y:<j> or col:<name>)"
        )))
    }
}

impl fmt::Display for TauSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TauSpec::Outcome => write!(f, "y"),
            TauSpec::CovariateTimesOutcome(j) => write!(f, "xj_y:{j}"),
            TauSpec::Column(name) => write!(f, "col:{name}"),
        }
    }
}

impl Serialize for TauSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TauSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `τ(X_i, Y_i)` in original units; defined on complete cases.
#[derive(Debug, Clone, PartialEq)]
pub struct TauValues(Vec<Option<f64>>);

impl TauValues {
    pub fn evaluate(spec: &TauSpec, table: &ObservationTable) -> Result<Self> {
        let values = match spec {
            TauSpec::Outcome => table.outcomes().to_vec(),
            TauSpec::CovariateTimesOutcome(j) => {
                if *j > table.d() {
                    return Err(Error::InvalidSpec(format!(
                        "functional uses x{j} but the table has {} covariates",
                        table.d()
                    )));
                }
                (0..table.n())
                    .map(|i| table.y(i).map(|y| table.x_row(i)[j - 1] * y))
                    .collect()
            }
            TauSpec::Column(name) => {
                let col = table
                    .column(name)
                    .ok_or_else(|| Error::MissingColumn(name.clone()))?;
                col.iter()
                    .enumerate()
                    .map(|(i, v)| match (table.r(i), v) {
                        (true, Some(v)) => Ok(Some(*v)),
                        (true, None) => Err(Error::InconsistentMissingness {
                            row: i,
                            detail: "functional column missing on a complete case",
                        }),
                        (false, _) => Ok(None),
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Self(values))
    }

    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        Self(values)
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Values with `0` on nonresponse rows, i.e. `R_i τ_i`.
    pub fn weighted(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.unwrap_or(0.0)).collect()
    }

    pub fn shifted(&self, a: f64) -> Self {
        Self(self.0.iter().map(|v| v.map(|v| v + a)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v.map(|v| v * s)).collect())
    }

    pub(crate) fn complete(&self, rows: &[usize]) -> Result<DVector<f64>> {
        let v = rows
            .iter()
            .map(|&i| {
                self.0[i].ok_or(Error::InconsistentMissingness {
                    row: i,
                    detail: "functional undefined on a complete case",
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }
}

/// `θ ↦ θᵀAθ − 2bᵀθ + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Self {
        let a = 0.5 * (&a + a.transpose());
        Self { a, b, c }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&(&self.a * theta)) - 2.0 * self.b.dot(theta) + self.c
    }

    pub fn gradient(&self, theta: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.a * theta - &self.b)
    }

    /// The same form with `b ← s·b` and `c ← s²·c`.
    pub fn rescaled(&self, s: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: &self.b * s,
            c: self.c * s * s,
        }
    }
}

/// Least-squares projection onto `φ(X, Y)` fitted on complete cases.
#[derive(Debug, Clone)]
pub struct ProjectionOperator {
    basis: Basis,
    n: usize,
    rows: Vec<usize>,
    phi: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    ridge: Option<f64>,
}

/// Relative eigenvalue floor below which `ΦᵀΛΦ` counts as singular.
const SINGULAR_RCOND: f64 = 1e-12;
const RIDGE_FACTOR: f64 = 1e-10;

impl ProjectionOperator {
    /// Fits on a table whose `x` and `y` are already on the unit scale.
    pub fn fit(table: &ObservationTable, phi_spec: &BasisSpec) -> Result<Self> {
        let basis = Basis::new(phi_spec)?;
        if basis.dim() != table.d() + 1 {
            return Err(Error::DimensionMismatch {
                expected: table.d() + 1,
                got: basis.dim(),
            });
        }
        let rows: Vec<usize> = (0..table.n()).filter(|&i| table.r(i)).collect();
        let k = basis.len();
        if rows.len() < k {
            return Err(Error::TooFewCompleteCases {
                complete: rows.len(),
                needed: k,
            });
        }
        let points: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| table.xy_point(i).expect("complete case has outcome"))
            .collect();
        let phi = basis.design(points.iter().map(Vec::as_slice))?;
        let gram = phi.tr_mul(&phi);
        let gram = 0.5 * (&gram + gram.transpose());

        let eig = gram.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = (eig.min(), eig.max());
        let singular = !(lo > SINGULAR_RCOND * hi);
        let ridge = singular.then(|| RIDGE_FACTOR * gram.trace() / k as f64);
        let stabilized = match ridge {
            Some(r) => &gram + DMatrix::identity(k, k) * r,
            None => gram.clone(),
        };
        let gram_inv = stabilized
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalFailure("projection Gram matrix is not positive definite".into()))?
            .inverse();
        let gram_inv = 0.5 * (&gram_inv + gram_inv.transpose());
        Ok(Self {
            basis,
            n: table.n(),
            rows,
            phi,
            gram,
            gram_inv,
            ridge,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Indices of the complete cases, in table order.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn phi_matrix(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// Ridge added to `ΦᵀΛΦ`, if any.
    pub fn ridge(&self) -> Option<f64> {
        self.ridge
    }

    /// `ΦᵀΛΦ + ridge·I`.
    pub fn stabilized_gram(&self) -> DMatrix<f64> {
        let k = self.basis.len();
        &self.gram + DMatrix::identity(k, k) * self.ridge.unwrap_or(0.0)
    }

    /// Regression coefficients of `B` (given on complete cases) on `φ`.
    pub fn coefficients(&self, b: &DVector<f64>) -> DVector<f64> {
        &self.gram_inv * self.phi.tr_mul(b)
    }

    /// Fitted values on complete cases for each column of `b`.
    pub fn fitted(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        &self.phi * (&self.gram_inv * self.phi.tr_mul(b))
    }

    pub fn fitted_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        &self.phi * self.coefficients(b)
    }

    /// `Ê(B | R = 1, x, y)` at an arbitrary unit-scale point.
    pub fn predict(&self, b: &DVector<f64>, point: &[f64]) -> Result<f64> {
        let coef = self.coefficients(b);
        Ok(self.basis.eval(point)?.iter().zip(coef.iter()).map(|(a, c)| a * c).sum())
    }
}

pub fn fit_projection(table: &ObservationTable, phi_spec: &BasisSpec) -> Result<ProjectionOperator> {
    ProjectionOperator::fit(table, phi_spec)
}

/// `ψ(X_i, Z_i)` for the given rows.
pub(crate) fn psi_rows(table: &ObservationTable, psi: &Basis, rows: &[usize]) -> Result<DMatrix<f64>> {
    if psi.dim() != table.d() + 1 {
        return Err(Error::DimensionMismatch {
            expected: table.d() + 1,
            got: psi.dim(),
        });
    }
    let points: Vec<Vec<f64>> = rows.iter().map(|&i| table.xz_point(i)).collect();
    psi.design(points.iter().map(Vec::as_slice))
}

/// `ê(X_i, Y_i, δ) = Ê{τ − δ(X, Z) | R = 1, X_i, Y_i}`; `None` on rows
/// where `Y_i` is missing.
pub fn residual_map(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    delta: &SieveFunction,
) -> Result<Vec<Option<f64>>> {
    let rows = op.rows();
    let t = tau.complete(rows)?;
    let psi = psi_rows(table, delta.basis(), rows)?;
    let b = t - psi * delta.theta();
    let fitted = op.fitted_vec(&b);
    let mut out = vec![None; table.n()];
    for (k, &i) in rows.iter().enumerate() {
        out[i] = Some(fitted[k]);
    }
    Ok(out)
}

/// Everything the estimator needs from one dataset: the three criteria
/// plus the projected design pieces they are built from.
#[derive(Debug, Clone)]
pub struct SampleForms {
    pub q: QuadraticForm,
    pub m: QuadraticForm,
    pub c: QuadraticForm,
    /// Projected `ψ` columns on complete cases, `n₁ × q`.
    pub projected_psi: DMatrix<f64>,
    /// Projected `τ` on complete cases.
    pub projected_tau: DVector<f64>,
    /// `ψ(X_i, Z_i)` on complete cases.
    pub psi_complete: DMatrix<f64>,
    /// `ψ(X_i, Z_i)` on nonresponse rows.
    pub psi_missing: DMatrix<f64>,
    /// `τ_i` on complete cases.
    pub tau_complete: DVector<f64>,
    pub n: usize,
}

impl SampleForms {
    pub fn assemble(
        op: &ProjectionOperator,
        table: &ObservationTable,
        tau: &TauValues,
        psi: &Basis,
    ) -> Result<Self> {
        let n = table.n() as f64;
        let rows = op.rows();
        let missing: Vec<usize> = (0..table.n()).filter(|&i| !table.r(i)).collect();
        let tau_complete = tau.complete(rows)?;
        let psi_complete = psi_rows(table, psi, rows)?;
        let psi_missing = psi_rows(table, psi, &missing)?;

        let mut stacked = DMatrix::zeros(rows.len(), psi.len() + 1);
        stacked.column_mut(0).copy_from(&tau_complete);
        stacked.columns_mut(1, psi.len()).copy_from(&psi_complete);
        let fitted = op.fitted(&stacked);
        let projected_tau: DVector<f64> = fitted.column(0).into_owned();
        let projected_psi: DMatrix<f64> = fitted.columns(1, psi.len()).into_owned();

        let gram = projected_psi.tr_mul(&projected_psi) / n;
        let q = QuadraticForm::new(
            gram.clone(),
            projected_psi.tr_mul(&projected_tau) / n,
            projected_tau.norm_squared() / n,
        );
        let m = QuadraticForm::new(
            psi_missing.tr_mul(&psi_missing) / n,
            DVector::zeros(psi.len()),
            0.0,
        );
        let missing_mean = psi_missing.row_sum().transpose() / n;
        let c = QuadraticForm::new(gram, missing_mean, 0.0);
        Ok(Self {
            q,
            m,
            c,
            projected_psi,
            projected_tau,
            psi_complete,
            psi_missing,
            tau_complete,
            n: table.n(),
        })
    }
}

/// `Q_n(ψᵀθ) = (1/n) Σ R_i ê²(X_i, Y_i, ψᵀθ)`.
pub fn assemble_qn(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    psi_spec: &BasisSpec,
) -> Result<QuadraticForm> {
    Ok(SampleForms::assemble(op, table, tau, &Basis::new(psi_spec)?)?.q)
}

/// `M_n(ψᵀθ) = (1/n) Σ (1 − R_i) (ψᵀθ)²(X_i, Z_i)`.
pub fn assemble_mn(table: &ObservationTable, psi_spec: &BasisSpec) -> Result<QuadraticForm> {
    let psi = Basis::new(psi_spec)?;
    let missing: Vec<usize> = (0..table.n()).filter(|&i| !table.r(i)).collect();
    let pm = psi_rows(table, &psi, &missing)?;
    Ok(QuadraticForm::new(
        pm.tr_mul(&pm) / table.n() as f64,
        DVector::zeros(psi.len()),
        0.0,
    ))
}

/// `C_n(ψᵀθ) = (1/n) Σ R_i Ê{ψᵀθ | R=1, X_i, Y_i}² − (2/n) Σ (1 − R_i) ψᵀθ(X_i, Z_i)`.
pub fn assemble_cn(op: &ProjectionOperator, table: &ObservationTable, psi_spec: &BasisSpec) -> Result<QuadraticForm> {
    let psi = Basis::new(psi_spec)?;
    let tau = TauValues(vec![Some(0.0); table.n()]);
    Ok(SampleForms::assemble(op, table, &tau, &psi)?.c)
}
