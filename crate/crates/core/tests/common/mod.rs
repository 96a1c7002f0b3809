#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadowmean::{
    min_q, Basis, ObservationTable, ProjectionOperator, QuadraticForm, SieveFunction, SobolevGram, SolverConfig,
    TauValues,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// Least-squares fitted values via QR, independent of the normal equations.
pub fn qr_fitted(design: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let qr = design.clone().qr();
    let coef = qr.r().solve_upper_triangular(&(qr.q().transpose() * b)).unwrap();
    design * coef
}

pub fn design_at(basis: &Basis, points: &[Vec<f64>]) -> DMatrix<f64> {
    basis.design(points.iter().map(Vec::as_slice)).unwrap()
}

pub fn xy_points(table: &ObservationTable) -> Vec<Vec<f64>> {
    (0..table.n()).filter_map(|i| table.xy_point(i)).collect()
}

pub fn complete_rows(table: &ObservationTable) -> Vec<usize> {
    (0..table.n()).filter(|&i| table.r(i)).collect()
}

/// `Q_n`, `M_n`, `C_n` at `θ` computed row by row from their definitions.
pub fn direct_criteria(
    op: &ProjectionOperator,
    table: &ObservationTable,
    tau: &TauValues,
    psi: &Basis,
    theta: &DVector<f64>,
) -> (f64, f64, f64) {
    let n = table.n() as f64;
    let delta = SieveFunction::new(psi.clone(), theta.clone()).unwrap();
    let e = shadowmean::residual_map(op, table, tau, &delta).unwrap();
    let zero = TauValues::from_values(vec![Some(0.0); table.n()]);
    let neg = shadowmean::residual_map(op, table, &zero, &delta).unwrap();
    let mut q = 0.0;
    let mut m = 0.0;
    let mut c = 0.0;
    for i in 0..table.n() {
        if table.r(i) {
            q += e[i].unwrap().powi(2);
            c += neg[i].unwrap().powi(2);
        } else {
            let d = delta.eval(&table.xz_point(i)).unwrap();
            m += d * d;
            c -= 2.0 * d;
        }
    }
    (q / n, m / n, c / n)
}

/// Relative discrepancy between a form and a direct value, measured
/// against the size of the form's individual terms.
pub fn form_discrepancy(form: &QuadraticForm, theta: &DVector<f64>, direct: f64) -> f64 {
    let scale = theta.dot(&(&form.a * theta)).abs() + 2.0 * form.b.dot(theta).abs() + form.c.abs();
    (form.eval(theta) - direct).abs() / scale.max(direct.abs()).max(f64::MIN_POSITIVE)
}

/// `Q(θ) = ‖Wθ − t‖² / m` for random `W`, `t`, so `Q ≥ 0` as in the sample
/// criterion.
pub fn random_q(rng: &mut impl Rng, dim: usize, rows: usize) -> QuadraticForm {
    let w = DMatrix::from_fn(rows, dim, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let t = random_vec(rng, rows, 2.0);
    let m = rows as f64;
    QuadraticForm::new(w.transpose() * &w / m, w.transpose() * &t / m, t.norm_squared() / m)
}

pub fn random_psd(rng: &mut impl Rng, dim: usize, rank: usize) -> DMatrix<f64> {
    let l = DMatrix::from_fn(dim, rank, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    &l * l.transpose()
}

pub fn random_gram(rng: &mut impl Rng, dim: usize) -> SobolevGram {
    SobolevGram {
        alpha0: 1,
        h: random_psd(rng, dim, dim) + DMatrix::identity(dim, dim) * 0.5,
    }
}

pub fn config(c_n: f64, k: f64) -> SolverConfig {
    SolverConfig {
        k_radius: k,
        ..SolverConfig::default()
    }
    .with_cn(c_n)
}

pub struct Instance {
    pub q: QuadraticForm,
    pub m: QuadraticForm,
    pub gram: SobolevGram,
    pub cfg: SolverConfig,
}

pub fn instance(seed: u64, dim: usize) -> Instance {
    let mut rng = rng(seed);
    let q = random_q(&mut rng, dim, 6);
    let rank = if seed % 3 == 0 { dim - 1 } else { dim };
    let m = QuadraticForm::new(random_psd(&mut rng, dim, rank), DVector::zeros(dim), 0.0);
    let gram = random_gram(&mut rng, dim);
    let k = [0.3, 1.0, 3.0, 20.0][(seed % 4) as usize];
    let (_, q_min) = min_q(&q, &gram, k).unwrap();
    let u: f64 = rng.random_range(0.02..0.9);
    let c_n = q_min + u * (q.c - q_min);
    Instance {
        q,
        m,
        gram,
        cfg: config(c_n, k),
    }
}

/// Half-widths of the box enclosing `θᵀHθ ≤ K²`.
pub fn ellipsoid_box(gram: &SobolevGram, k: f64) -> Vec<f64> {
    let inv = gram.h.clone().try_inverse().unwrap();
    (0..gram.h.nrows()).map(|j| k * inv[(j, j)].sqrt()).collect()
}

pub fn grid_min(
    extent: &[f64],
    feasible: impl Fn(&DVector<f64>) -> bool,
    objective: impl Fn(&DVector<f64>) -> f64,
) -> Option<f64> {
    let steps = 201;
    let mut best: Option<f64> = None;
    for i in 0..steps {
        for j in 0..steps {
            let t = |s: usize, e: f64| -e + 2.0 * e * s as f64 / (steps - 1) as f64;
            let theta = DVector::from_vec(vec![t(i, extent[0]), t(j, extent[1])]);
            if feasible(&theta) {
                let v = objective(&theta);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    }
    best
}
