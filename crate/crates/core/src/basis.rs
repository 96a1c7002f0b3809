//! Tensor-product sieve bases on the unit cube, their partial derivatives,
//! and the Sobolev Gram matrix used for the smoothness constraint.
//!
//! Every basis is built from univariate families whose function 0 is the
//! constant, so the tensor function with multi-index `(0, ..., 0)` is the
//! constant 1 and always comes first. Tensor functions are ordered by
//! graded index (sum of the univariate indices), ties broken by descending
//! lexicographic order; `size` truncates that ordering.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Overshoot outside `[0, 1]` that is silently clamped.
pub const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisFamily {
    TensorPolynomial,
    TensorBspline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    /// Polynomial degree per input dimension.
    pub degrees: Vec<u32>,
    /// Interior knot count per dimension (B-splines only).
    #[serde(default)]
    pub knots: Vec<u32>,
    pub dim: usize,
    /// Drop tensor functions whose graded index exceeds this bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_total_degree: Option<u32>,
    /// Keep only the first `size` functions of the graded ordering.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
}

impl BasisSpec {
    pub fn tensor_polynomial(degrees: Vec<u32>) -> Self {
        Self {
            family: BasisFamily::TensorPolynomial,
            dim: degrees.len(),
            degrees,
            knots: Vec::new(),
            max_total_degree: None,
            size: None,
        }
    }

    pub fn tensor_bspline(degrees: Vec<u32>, knots: Vec<u32>) -> Self {
        Self {
            family: BasisFamily::TensorBspline,
            dim: degrees.len(),
            degrees,
            knots,
            max_total_degree: None,
            size: None,
        }
    }

    /// Polynomials of total degree at most `degree` in `dim` variables.
    pub fn total_degree(dim: usize, degree: u32) -> Self {
        Self {
            max_total_degree: Some(degree),
            ..Self::tensor_polynomial(vec![degree; dim])
        }
    }

    /// The first `size` monomials in graded order.
    pub fn graded_polynomial(dim: usize, size: usize) -> Self {
        let mut degree = 0u32;
        while count_total_degree(dim, degree) < size {
            degree += 1;
        }
        Self {
            size: Some(size),
            ..Self::total_degree(dim, degree)
        }
    }

    pub fn size(&self) -> Result<usize> {
        Ok(Basis::new(self)?.len())
    }
}

fn count_total_degree(dim: usize, degree: u32) -> usize {
    // C(dim + degree, dim)
    let mut c = 1usize;
    for i in 1..=dim {
        c = c * (degree as usize + i) / i;
    }
    c
}

/// One coordinate's family. Function 0 is the constant.
#[derive(Debug, Clone, PartialEq)]
enum Univariate {
    Polynomial {
        degree: u32,
    },
    Spline {
        degree: u32,
        knots: Vec<f64>,
        /// Integral over [0, 1] of each raw B-spline.
        means: Vec<f64>,
    },
}

impl Univariate {
    fn len(&self) -> usize {
        match self {
            Univariate::Polynomial { degree } => *degree as usize + 1,
            Univariate::Spline { means, .. } => means.len(),
        }
    }

    /// Highest polynomial degree on any piece.
    fn degree(&self) -> u32 {
        match self {
            Univariate::Polynomial { degree } | Univariate::Spline { degree, .. } => *degree,
        }
    }

    /// Breakpoints of the piecewise-polynomial structure.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Univariate::Polynomial { .. } => vec![0.0, 1.0],
            Univariate::Spline { knots, .. } => {
                let mut b = knots.clone();
                b.dedup();
                b
            }
        }
    }

    fn eval(&self, w: f64, order: u32, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Univariate::Polynomial { degree } => {
                for a in 0..=*degree {
                    if a < order {
                        out.push(0.0);
                    } else {
                        let falling: f64 = ((a - order + 1)..=a).map(f64::from).product();
                        out.push(falling * w.powi((a - order) as i32));
                    }
                }
            }
            Univariate::Spline {
                degree,
                knots,
                means,
            } => {
                let raw = bspline_all(knots, *degree, w, order);
                out.push(if order == 0 { 1.0 } else { 0.0 });
                for j in 1..raw.len() {
                    out.push(if order == 0 { raw[j] - means[j] } else { raw[j] });
                }
            }
        }
    }
}

/// Clamped knot vector with `interior` uniformly spaced interior knots.
pub fn clamped_knots(degree: u32, interior: u32) -> Vec<f64> {
    let p = degree as usize;
    let m = interior as usize;
    let mut t = vec![0.0; p + 1];
    t.extend((1..=m).map(|i| i as f64 / (m as f64 + 1.0)));
    t.extend(std::iter::repeat_n(1.0, p + 1));
    t
}

/// All `order`-th derivatives of the raw B-splines of degree `degree` on
/// knot vector `t` at `x` (Cox–de Boor with the right endpoint closed).
pub fn bspline_all(t: &[f64], degree: u32, x: f64, order: u32) -> Vec<f64> {
    let p = degree as usize;
    let count = t.len() - p - 1;
    if order > degree {
        return vec![0.0; count];
    }
    if order > 0 {
        let lower = bspline_all(t, degree - 1, x, order - 1);
        let pf = p as f64;
        return (0..count)
            .map(|i| {
                let left = t[i + p] - t[i];
                let right = t[i + p + 1] - t[i + 1];
                let a = if left > 0.0 { lower[i] / left } else { 0.0 };
                let b = if right > 0.0 { lower[i + 1] / right } else { 0.0 };
                pf * (a - b)
            })
            .collect();
    }
    let last = t.len() - 1;
    let span = if x >= t[last] {
        (0..last).rev().find(|&i| t[i] < t[i + 1]).unwrap_or(0)
    } else {
        (0..last)
            .find(|&i| t[i] <= x && x < t[i + 1])
            .unwrap_or(0)
    };
    let mut n = vec![0.0; last];
    n[span] = 1.0;
    for q in 1..=p {
        let mut next = vec![0.0; last - q];
        for (i, v) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            let d1 = t[i + q] - t[i];
            if d1 > 0.0 {
                acc += (x - t[i]) / d1 * n[i];
            }
            let d2 = t[i + q + 1] - t[i + 1];
            if d2 > 0.0 {
                acc += (t[i + q + 1] - x) / d2 * n[i + 1];
            }
            *v = acc;
        }
        n = next;
    }
    n
}

/// A compiled basis: the spec, per-dimension families, and the retained
/// tensor multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    spec: BasisSpec,
    univariate: Vec<Univariate>,
    indices: Vec<Vec<u32>>,
}

impl Basis {
    pub fn new(spec: &BasisSpec) -> Result<Self> {
        if spec.degrees.len() != spec.dim {
            return Err(Error::InvalidSpec(format!(
                "basis has dim {} but {} degrees",
                spec.dim,
                spec.degrees.len()
            )));
        }
        let univariate: Vec<Univariate> = match spec.family {
            BasisFamily::TensorPolynomial => spec
                .degrees
                .iter()
                .map(|&degree| Univariate::Polynomial { degree })
                .collect(),
            BasisFamily::TensorBspline => {
                let knots = if spec.knots.is_empty() {
                    vec![0; spec.dim]
                } else {
                    spec.knots.clone()
                };
                if knots.len() != spec.dim {
                    return Err(Error::InvalidSpec(format!(
                        "basis has dim {} but {} knot counts",
                        spec.dim,
                        knots.len()
                    )));
                }
                spec.degrees
                    .iter()
                    .zip(knots)
                    .map(|(&degree, interior)| {
                        let t = clamped_knots(degree, interior);
                        let p = degree as usize;
                        let count = t.len() - p - 1;
                        let means = (0..count)
                            .map(|j| (t[j + p + 1] - t[j]) / (p as f64 + 1.0))
                            .collect();
                        Univariate::Spline {
                            degree,
                            knots: t,
                            means,
                        }
                    })
                    .collect()
            }
        };
        let caps: Vec<u32> = univariate.iter().map(|u: &Univariate| u.len() as u32 - 1).collect();
        let mut indices = Vec::new();
        let mut current = vec![0u32; spec.dim];
        enumerate(&caps, spec.max_total_degree, 0, &mut current, &mut indices);
        indices.sort_by(|a, b| {
            let sa: u32 = a.iter().sum();
            let sb: u32 = b.iter().sum();
            sa.cmp(&sb).then_with(|| b.cmp(a))
        });
        if let Some(size) = spec.size {
            if size == 0 || size > indices.len() {
                return Err(Error::InvalidSpec(format!(
                    "basis size {size} outside 1..={}",
                    indices.len()
                )));
            }
            indices.truncate(size);
        }
        Ok(Self {
            spec: spec.clone(),
            univariate,
            indices,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn multi_indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    fn check_point(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: point.len(),
            });
        }
        point
            .iter()
            .map(|&v| {
                if (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&v) {
                    Ok(v.clamp(0.0, 1.0))
                } else {
                    Err(Error::OutOfDomain { value: v })
                }
            })
            .collect()
    }

    fn tensor(&self, point: &[f64], orders: &[u32], out: &mut [f64]) -> Result<()> {
        let p = self.check_point(point)?;
        let mut tables = Vec::with_capacity(self.dim());
        let mut buf = Vec::new();
        for (j, u) in self.univariate.iter().enumerate() {
            u.eval(p[j], orders[j], &mut buf);
            tables.push(buf.clone());
        }
        for (o, idx) in out.iter_mut().zip(&self.indices) {
            *o = idx
                .iter()
                .enumerate()
                .map(|(j, &a)| tables[j][a as usize])
                .product();
        }
        Ok(())
    }

    /// All basis functions at `point`.
    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(point, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, point: &[f64], out: &mut [f64]) -> Result<()> {
        let zeros = vec![0; self.dim()];
        self.tensor(point, &zeros, out)
    }

    /// Partial derivative `D^multi_index` of every basis function at `point`.
    pub fn eval_deriv(&self, point: &[f64], multi_index: &[u32]) -> Result<Vec<f64>> {
        if multi_index.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: multi_index.len(),
            });
        }
        let mut out = vec![0.0; self.len()];
        self.tensor(point, multi_index, &mut out)?;
        Ok(out)
    }

    /// Design matrix with one row per point.
    pub fn design<'a>(&self, points: impl ExactSizeIterator<Item = &'a [f64]>) -> Result<DMatrix<f64>> {
        let rows = points.len();
        let mut m = DMatrix::zeros(rows, self.len());
        let mut buf = vec![0.0; self.len()];
        for (i, p) in points.enumerate() {
            self.eval_into(p, &mut buf)?;
            for (k, v) in buf.iter().enumerate() {
                m[(i, k)] = *v;
            }
        }
        Ok(m)
    }

    /// Default quadrature nodes per interval: `max(degree + 1, 8)`.
    pub fn default_nodes(&self) -> usize {
        let max_degree = self.univariate.iter().map(Univariate::degree).max().unwrap_or(0);
        (max_degree as usize + 1).max(8)
    }
}

fn enumerate(caps: &[u32], max_total: Option<u32>, j: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if j == caps.len() {
        out.push(current.clone());
        return;
    }
    let used: u32 = current[..j].iter().sum();
    for a in 0..=caps[j] {
        if max_total.is_some_and(|m| used + a > m) {
            break;
        }
        current[j] = a;
        enumerate(caps, max_total, j + 1, current, out);
    }
    current[j] = 0;
}

pub fn eval_basis(spec: &BasisSpec, point: &[f64]) -> Result<Vec<f64>> {
    Basis::new(spec)?.eval(point)
}

pub fn eval_basis_deriv(spec: &BasisSpec, point: &[f64], multi_index: &[u32], alpha0: u32) -> Result<Vec<f64>> {
    let order: u32 = multi_index.iter().sum();
    if order > alpha0 {
        return Err(Error::OrderTooHigh { order, max: alpha0 });
    }
    Basis::new(spec)?.eval_deriv(point, multi_index)
}

/// A sieve element `θᵀψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveFunction {
    basis: Basis,
    theta: DVector<f64>,
}

impl SieveFunction {
    pub fn new(basis: Basis, theta: DVector<f64>) -> Result<Self> {
        if theta.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: theta.len(),
            });
        }
        Ok(Self { basis, theta })
    }

    pub fn zero(basis: Basis) -> Self {
        let theta = DVector::zeros(basis.len());
        Self { basis, theta }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(self.basis.eval(point)?.iter().zip(self.theta.iter()).map(|(a, b)| a * b).sum())
    }
}

/// `H = Σ_{|λ| ≤ α₀} ∫ D^λψ D^λψᵀ` over the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevGram {
    pub alpha0: u32,
    pub h: DMatrix<f64>,
}

impl SobolevGram {
    pub fn new(basis: &Basis, alpha0: u32) -> Self {
        Self::with_nodes(basis, alpha0, basis.default_nodes())
    }

    /// Tensor Gauss–Legendre quadrature with `nodes` per piece and
    /// dimension. The integrand factorizes over coordinates, so the tensor
    /// rule is applied one coordinate at a time.
    pub fn with_nodes(basis: &Basis, alpha0: u32, nodes: usize) -> Self {
        // one_d[j][k] = ∫ u_a^(k) u_b^(k) for dimension j, order k.
        let mut one_d: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(basis.dim());
        let mut buf = Vec::new();
        for u in &basis.univariate {
            let len = u.len();
            let mut by_order = Vec::with_capacity(alpha0 as usize + 1);
            let bps = u.breakpoints();
            let rules: Vec<_> = bps
                .windows(2)
                .map(|w| gauss_legendre(nodes, w[0], w[1]))
                .collect();
            for k in 0..=alpha0 {
                let mut g = DMatrix::zeros(len, len);
                if k <= u.degree() {
                    for (xs, ws) in &rules {
                        for (&x, &w) in xs.iter().zip(ws) {
                            u.eval(x, k, &mut buf);
                            for a in 0..len {
                                for b in 0..len {
                                    g[(a, b)] += w * buf[a] * buf[b];
                                }
                            }
                        }
                    }
                }
                by_order.push(g);
            }
            one_d.push(by_order);
        }
        let q = basis.len();
        let mut h = DMatrix::zeros(q, q);
        let order_cap = alpha0 as usize;
        let mut acc = vec![0.0; order_cap + 1];
        let mut next = vec![0.0; order_cap + 1];
        for a in 0..q {
            for b in a..q {
                acc.iter_mut().for_each(|v| *v = 0.0);
                acc[0] = 1.0;
                for (j, by_order) in one_d.iter().enumerate() {
                    let (ia, ib) = (basis.indices[a][j] as usize, basis.indices[b][j] as usize);
                    next.iter_mut().for_each(|v| *v = 0.0);
                    for s in 0..=order_cap {
                        if acc[s] == 0.0 {
                            continue;
                        }
                        for l in 0..=(order_cap - s) {
                            next[s + l] += acc[s] * by_order[l][(ia, ib)];
                        }
                    }
                    std::mem::swap(&mut acc, &mut next);
                }
                let v: f64 = acc.iter().sum();
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        Self { alpha0, h }
    }

    pub fn norm_sq(&self, theta: &DVector<f64>) -> f64 {
        theta.dot(&(&self.h * theta))
    }
}

pub fn sobolev_gram(spec: &BasisSpec, alpha0: u32) -> Result<SobolevGram> {
    Ok(SobolevGram::new(&Basis::new(spec)?, alpha0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn linear_polynomial_values() {
        let spec = BasisSpec::tensor_polynomial(vec![1]);
        assert_eq!(eval_basis(&spec, &[0.5]).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn bilinear_tensor_values() {
        let spec = BasisSpec::tensor_polynomial(vec![1, 1]);
        let v = eval_basis(&spec, &[0.5, 0.2]).unwrap();
        assert!(close(&v, &[1.0, 0.5, 0.2, 0.1], 1e-15), "{v:?}");
    }

    #[test]
    fn raw_bspline_partition_of_unity() {
        let t = clamped_knots(3, 2);
        for k in 0..=50 {
            let x = k as f64 / 50.0;
            let s: f64 = bspline_all(&t, 3, x, 0).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
        }
    }

    #[test]
    fn reparameterized_spline_starts_with_constant() {
        let spec = BasisSpec::tensor_bspline(vec![3], vec![2]);
        let basis = Basis::new(&spec).unwrap();
        assert_eq!(basis.len(), 6);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            let v = basis.eval(&[x]).unwrap();
            assert_eq!(v[0], 1.0);
            // Raw partition of unity is reproduced by the constant plus the
            // centred splines: B_0 = 1 - Σ_{j≥1} B_j.
            let raw = bspline_all(&clamped_knots(3, 2), 3, x, 0);
            let means: Vec<f64> = (1..6).map(|j| raw[j] - v[j]).collect();
            let b0 = 1.0 - raw[1..].iter().sum::<f64>();
            assert!((b0 - raw[0]).abs() < 1e-12);
            assert!(means.iter().all(|m| *m > 0.0));
        }
    }

    #[test]
    fn polynomial_derivatives() {
        let spec = BasisSpec::tensor_polynomial(vec![1]);
        assert_eq!(eval_basis_deriv(&spec, &[0.7], &[1], 1).unwrap(), vec![0.0, 1.0]);
        let spec = BasisSpec::tensor_polynomial(vec![2]);
        assert_eq!(eval_basis_deriv(&spec, &[0.3], &[2], 2).unwrap(), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn derivative_order_is_bounded() {
        let spec = BasisSpec::tensor_polynomial(vec![2, 2]);
        let err = eval_basis_deriv(&spec, &[0.3, 0.3], &[2, 1], 2).unwrap_err();
        assert!(matches!(err, Error::OrderTooHigh { order: 3, max: 2 }));
    }

    #[test]
    fn bspline_derivatives_match_finite_differences() {
        let spec = BasisSpec::tensor_bspline(vec![3], vec![3]);
        let basis = Basis::new(&spec).unwrap();
        let h = 1e-5;
        for k in 1..=20 {
            let x = k as f64 / 21.0;
            let d = basis.eval_deriv(&[x], &[1]).unwrap();
            let up = basis.eval(&[x + h]).unwrap();
            let dn = basis.eval(&[x - h]).unwrap();
            for q in 0..basis.len() {
                let fd = (up[q] - dn[q]) / (2.0 * h);
                assert!((fd - d[q]).abs() <= 1e-6, "x={x} q={q} fd={fd} an={}", d[q]);
            }
            let d2 = basis.eval_deriv(&[x], &[2]).unwrap();
            let dup = basis.eval_deriv(&[x + h], &[1]).unwrap();
            let ddn = basis.eval_deriv(&[x - h], &[1]).unwrap();
            for q in 0..basis.len() {
                let fd = (dup[q] - ddn[q]) / (2.0 * h);
                assert!((fd - d2[q]).abs() <= 1e-5, "second derivative x={x} q={q}");
            }
        }
    }

    #[test]
    fn domain_clamping() {
        let spec = BasisSpec::tensor_polynomial(vec![1]);
        assert_eq!(eval_basis(&spec, &[1.0 + 5e-10]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(eval_basis(&spec, &[1.01]), Err(Error::OutOfDomain { .. })));
        assert!(matches!(
            eval_basis(&spec, &[0.1, 0.2]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn graded_ordering_and_truncation() {
        let spec = BasisSpec::total_degree(2, 2);
        let b = Basis::new(&spec).unwrap();
        assert_eq!(
            b.multi_indices(),
            &[vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
        let g = BasisSpec::graded_polynomial(5, 6);
        let b = Basis::new(&g).unwrap();
        assert_eq!(b.len(), 6);
        assert!(b.multi_indices()[1..].iter().all(|m| m.iter().sum::<u32>() == 1));
        assert_eq!(BasisSpec::graded_polynomial(5, 21).size().unwrap(), 21);
    }

    #[test]
    fn gram_of_linear_basis_has_known_value() {
        let spec = BasisSpec::tensor_polynomial(vec![1]);
        let g = sobolev_gram(&spec, 1).unwrap();
        let expect = [[1.0, 0.5], [0.5, 4.0 / 3.0]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((g.h[(a, b)] - expect[a][b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gram_is_spd_and_quadrature_stable() {
        for spec in [
            BasisSpec::total_degree(3, 2),
            BasisSpec::tensor_polynomial(vec![2, 3]),
            BasisSpec::tensor_bspline(vec![3, 2], vec![2, 1]),
        ] {
            let basis = Basis::new(&spec).unwrap();
            let g = SobolevGram::new(&basis, 3);
            let g2 = SobolevGram::with_nodes(&basis, 3, 2 * basis.default_nodes());
            let asym = (&g.h - g.h.transpose()).amax();
            assert!(asym <= 1e-10 * g.h.amax());
            assert!((&g.h - &g2.h).amax() <= 1e-10, "{spec:?}");
            let min_eig = g.h.clone().symmetric_eigen().eigenvalues.min();
            assert!(min_eig > 0.0, "{spec:?}: {min_eig}");
        }
    }

    #[test]
    fn spec_json_fields() {
        let spec = BasisSpec::tensor_bspline(vec![3, 3], vec![2, 2]);
        let v = serde_json::to_value(&spec).unwrap();
        assert_eq!(v["family"], "tensor-bspline");
        assert_eq!(v["degrees"], serde_json::json!([3, 3]));
        assert_eq!(v["knots"], serde_json::json!([2, 2]));
        assert_eq!(v["dim"], 2);
        let back: BasisSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, spec);
    }
}
