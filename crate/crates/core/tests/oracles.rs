//! Independent numerical oracles for bases, projections and the scalar
//! estimator pieces.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use shadowmean::quadrature::gauss_legendre;
use shadowmean::*;

fn toy() -> ObservationTable {
    let r = vec![true, false, true, true, false, true, true];
    let y = vec![Some(0.2), None, Some(0.9), Some(0.5), None, Some(0.7), Some(0.1)];
    let z = vec![0.1, 0.3, 0.8, 0.4, 0.9, 0.6, 0.0];
    ObservationTable::new(r, y, Vec::new(), 0, z).unwrap()
}

#[test]
fn projection_coefficients_match_hand_normal_equations() {
    // Complete cases y = (0.2, 0.9, 0.5, 0.7), regressing B on (1, y).
    let table = ObservationTable::new(
        vec![true, true, false, true, true],
        vec![Some(0.2), Some(0.9), None, Some(0.5), Some(0.7)],
        Vec::new(),
        0,
        vec![0.0, 1.0, 0.5, 0.25, 0.75],
    )
    .unwrap();
    let op = fit_projection(&table, &BasisSpec::tensor_polynomial(vec![1])).unwrap();
    let b = DVector::from_vec(vec![1.0, 3.0, 2.0, 2.5]);
    let coef = op.coefficients(&b);
    let ys = [0.2, 0.9, 0.5, 0.7];
    let (sy, sb) = (ys.iter().sum::<f64>(), b.sum());
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let syb: f64 = ys.iter().zip(b.iter()).map(|(y, b)| y * b).sum();
    let det = 4.0 * syy - sy * sy;
    let slope = (4.0 * syb - sy * sb) / det;
    let intercept = (syy * sb - sy * syb) / det;
    assert!((coef[0] - intercept).abs() < 1e-12);
    assert!((coef[1] - slope).abs() < 1e-12);
}

#[test]
fn intercept_and_span_are_reproduced() {
    let t = ScenarioSpec::new(Setting::LL, 400, 2).generate().unwrap().table;
    let scaled = fit_scaler(&t).unwrap().apply(&t).unwrap();
    let spec = BasisSpec::graded_polynomial(5, 6);
    let op = fit_projection(&scaled, &spec).unwrap();
    let ones = DVector::from_element(op.rows().len(), 1.0);
    assert!((op.fitted_vec(&ones) - &ones).amax() < 1e-10);
    let col = op.phi_matrix().column(3).into_owned();
    assert!((op.fitted_vec(&col) - &col).amax() < 1e-9);
    // (ΦᵀΛΦ + ridge I) gram_inv = I
    let prod = op.stabilized_gram() * op.gram_inv();
    assert!((prod - DMatrix::identity(6, 6)).amax() < 1e-8);
}

#[test]
fn residual_map_matches_qr_least_squares() {
    let table = toy();
    let phi = Basis::new(&BasisSpec::tensor_polynomial(vec![2])).unwrap();
    let psi = Basis::new(&BasisSpec::tensor_polynomial(vec![1])).unwrap();
    let op = ProjectionOperator::fit(&table, phi.spec()).unwrap();
    let tau = TauValues::evaluate(&TauSpec::Outcome, &table).unwrap();
    let theta = DVector::from_vec(vec![0.3, -0.7]);
    let delta = SieveFunction::new(psi.clone(), theta.clone()).unwrap();
    let e = residual_map(&op, &table, &tau, &delta).unwrap();

    let rows = complete_rows(&table);
    let design = design_at(&phi, &xy_points(&table));
    let b = DVector::from_iterator(
        rows.len(),
        rows.iter().map(|&i| table.y(i).unwrap() - (0.3 - 0.7 * table.z(i))),
    );
    let oracle = qr_fitted(&design, &b);
    for (k, &i) in rows.iter().enumerate() {
        assert!((e[i].unwrap() - oracle[k]).abs() < 1e-12);
    }
    assert!(e[1].is_none() && e[4].is_none());
}

#[test]
fn residual_map_trivial_cases() {
    let table = toy();
    let spec = BasisSpec::tensor_polynomial(vec![1]);
    let op = fit_projection(&table, &spec).unwrap();
    let zero = TauValues::from_values(vec![Some(0.0); table.n()]);
    let d0 = SieveFunction::zero(Basis::new(&spec).unwrap());
    assert!(residual_map(&op, &table, &zero, &d0).unwrap().iter().flatten().all(|v| *v == 0.0));
    let c = TauValues::from_values(vec![Some(2.5); table.n()]);
    let e = residual_map(&op, &table, &c, &d0).unwrap();
    assert!(e.iter().flatten().all(|v| (v - 2.5).abs() < 1e-10));
}

#[test]
fn r_hat_matches_dense_algebra() {
    let table = toy();
    let phi = Basis::new(&BasisSpec::tensor_polynomial(vec![2])).unwrap();
    let psi = Basis::new(&BasisSpec::tensor_polynomial(vec![1])).unwrap();
    let op = ProjectionOperator::fit(&table, phi.spec()).unwrap();
    let tau = TauValues::evaluate(&TauSpec::Outcome, &table).unwrap();
    let delta = SieveFunction::new(psi.clone(), DVector::from_vec(vec![0.1, 0.6])).unwrap();
    let h = SieveFunction::new(psi.clone(), DVector::from_vec(vec![-1.2, 2.0])).unwrap();

    let rows = complete_rows(&table);
    let design = design_at(&phi, &xy_points(&table));
    let zs: Vec<f64> = rows.iter().map(|&i| table.z(i)).collect();
    let ys: Vec<f64> = rows.iter().map(|&i| table.y(i).unwrap()).collect();
    let eh = qr_fitted(&design, &DVector::from_iterator(rows.len(), zs.iter().map(|z| -1.2 + 2.0 * z)));
    let e = qr_fitted(
        &design,
        &DVector::from_iterator(rows.len(), ys.iter().zip(&zs).map(|(y, z)| y - 0.1 - 0.6 * z)),
    );
    let oracle = eh.dot(&e) / table.n() as f64;
    assert!((r_hat(&op, &table, &tau, &delta, &h).unwrap() - oracle).abs() < 1e-12);

    let zero = SieveFunction::zero(psi);
    assert_eq!(r_hat(&op, &table, &tau, &delta, &zero).unwrap(), 0.0);
}

#[test]
fn sigma_hat_reduces_to_sample_sd_without_missingness() {
    let ys = [1.0, 4.0, 2.0, 8.0, 5.0];
    let table = ObservationTable::new(
        vec![true; 5],
        ys.iter().map(|&v| Some(v)).collect(),
        Vec::new(),
        0,
        vec![0.0, 0.2, 0.5, 0.7, 1.0],
    )
    .unwrap();
    let scaled = fit_scaler(&table).unwrap().apply(&table).unwrap();
    let spec = BasisSpec::tensor_polynomial(vec![1]);
    let op = fit_projection(&scaled, &spec).unwrap();
    let tau = TauValues::evaluate(&TauSpec::Outcome, &table).unwrap();
    let basis = Basis::new(&spec).unwrap();
    let delta = SieveFunction::new(basis.clone(), DVector::from_vec(vec![0.3, 0.1])).unwrap();
    let h = SieveFunction::zero(basis);
    let mean = ys.iter().sum::<f64>() / 5.0;
    let sd = (ys.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
    assert!((sigma_hat(&op, &scaled, &tau, &delta, &h).unwrap() - sd).abs() < 1e-12);

    let constant = TauValues::from_values(vec![Some(3.0); 5]);
    assert!(sigma_hat(&op, &scaled, &constant, &delta, &h).unwrap().abs() < 1e-7);
}

/// Full tensor Gauss–Legendre over the cube, evaluating every derivative
/// of every basis function at every node.
fn brute_force_gram(basis: &Basis, alpha0: u32, breaks: &[f64], nodes: usize) -> DMatrix<f64> {
    let dim = basis.dim();
    let q = basis.len();
    let mut pts1 = Vec::new();
    for w in breaks.windows(2) {
        let (x, wt) = gauss_legendre(nodes, w[0], w[1]);
        pts1.extend(x.into_iter().zip(wt));
    }
    let mut lambdas = Vec::new();
    let mut cur = vec![0u32; dim];
    fn rec(j: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if j == cur.len() {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur[j] = a;
            rec(j + 1, left - a, cur, out);
        }
        cur[j] = 0;
    }
    rec(0, alpha0, &mut cur, &mut lambdas);
    let mut h = DMatrix::zeros(q, q);
    let total = pts1.len().pow(dim as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut point = Vec::with_capacity(dim);
        let mut weight = 1.0;
        for _ in 0..dim {
            let (x, w) = pts1[rem % pts1.len()];
            rem /= pts1.len();
            point.push(x);
            weight *= w;
        }
        for lam in &lambdas {
            let v = DVector::from_vec(basis.eval_deriv(&point, lam).unwrap());
            h += &v * v.transpose() * weight;
        }
    }
    h
}

#[test]
fn gram_matches_tensor_quadrature_for_polynomials() {
    let basis = Basis::new(&BasisSpec::total_degree(2, 3)).unwrap();
    for alpha0 in [0, 1, 2, 3] {
        let fast = SobolevGram::new(&basis, alpha0);
        let slow = brute_force_gram(&basis, alpha0, &[0.0, 1.0], 6);
        let rel = (&fast.h - &slow).amax() / slow.amax();
        assert!(rel < 1e-12, "alpha0={alpha0}: {rel}");
    }
}

#[test]
fn gram_matches_tensor_quadrature_for_splines() {
    let basis = Basis::new(&BasisSpec::tensor_bspline(vec![3, 2], vec![2, 1])).unwrap();
    let fast = SobolevGram::new(&basis, 2);
    // Piecewise rule on the union of both knot grids.
    let breaks = [0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0];
    let slow = brute_force_gram(&basis, 2, &breaks, 5);
    assert!((&fast.h - &slow).amax() / slow.amax() < 1e-10);
}

#[test]
fn gram_of_linear_basis() {
    let g = sobolev_gram(&BasisSpec::tensor_polynomial(vec![1]), 1).unwrap();
    let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 4.0 / 3.0]);
    assert!((g.h - expect).amax() < 1e-14);
}

#[test]
fn plugging_in_the_true_representer_recovers_the_mean() {
    // Case II Model 1: δ₀(z) = z on the original scale, and z ∈ {0, 1} is
    // its own min–max image.
    let t = ScenarioSpec::new(Setting::Model1, 100_000, 17).generate().unwrap().table;
    let tau = TauValues::evaluate(&TauSpec::Outcome, &t).unwrap();
    let delta = SieveFunction::new(
        Basis::new(&BasisSpec::tensor_polynomial(vec![1])).unwrap(),
        DVector::from_vec(vec![0.0, 1.0]),
    )
    .unwrap();
    let m = mu_rep(&t, &tau, &delta).unwrap();
    assert!((m - 0.5).abs() <= 0.01, "{m}");
}

#[test]
fn representer_mean_with_constant_delta() {
    let t = toy();
    let tau = TauValues::evaluate(&TauSpec::Outcome, &t).unwrap();
    let basis = Basis::new(&BasisSpec::tensor_polynomial(vec![1])).unwrap();
    let d = SieveFunction::new(basis, DVector::from_vec(vec![0.75, 0.0])).unwrap();
    let expect = (0.2 + 0.9 + 0.5 + 0.7 + 0.1 + 2.0 * 0.75) / 7.0;
    assert!((mu_rep(&t, &tau, &d).unwrap() - expect).abs() < 1e-15);
}
