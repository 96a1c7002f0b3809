mod common;

use common::*;
use nalgebra::DVector;
use shadowmean::*;

const SETTINGS: [Setting; 6] = [
    Setting::LL,
    Setting::NL,
    Setting::LN,
    Setting::NN,
    Setting::Model1,
    Setting::Model2,
];

/// Scaled data, evaluated functional, projection and `ψ` for one scenario.
fn setup(setting: Setting, n: usize, seed: u64, q_n: usize, k_n: usize) -> (ObservationTable, TauValues, ProjectionOperator, Basis) {
    let t = ScenarioSpec::new(setting, n, seed).generate().unwrap().table;
    let tau = TauValues::evaluate(&TauSpec::Outcome, &t).unwrap();
    let scaled = fit_scaler(&t).unwrap().apply(&t).unwrap();
    let dim = t.d() + 1;
    let op = fit_projection(&scaled, &BasisSpec::graded_polynomial(dim, k_n)).unwrap();
    let psi = Basis::new(&BasisSpec::graded_polynomial(dim, q_n)).unwrap();
    (scaled, tau, op, psi)
}

#[test]
fn assembled_forms_match_direct_evaluation() {
    let mut worst: f64 = 0.0;
    for setting in SETTINGS {
        let dim = ScenarioSpec::new(setting, 1, 0).covariate_dim() + 1;
        let sizes = [(dim + 1, dim + 1), (dim + 1, (dim + 1) * (dim + 2) / 2)];
        for (seed, (q_n, k_n)) in sizes.into_iter().enumerate() {
            let (table, tau, op, psi) = setup(setting, 500, seed as u64, q_n, k_n);
            let forms = SampleForms::assemble(&op, &table, &tau, &psi).unwrap();
            let mut rng = rng(seed as u64);
            for _ in 0..20 {
                let theta = random_vec(&mut rng, psi.len(), 5.0);
                let (q, m, c) = direct_criteria(&op, &table, &tau, &psi, &theta);
                for (form, direct) in [(&forms.q, q), (&forms.m, m), (&forms.c, c)] {
                    let err = form_discrepancy(form, &theta, direct);
                    worst = worst.max(err);
                    assert!(err <= 1e-9, "{setting} q_n={q_n}: {err}");
                }
            }
        }
    }
    eprintln!("worst relative form error {worst:e}");
}

#[test]
fn standalone_assemblers_agree_with_the_bundle() {
    let (table, tau, op, psi) = setup(Setting::NN, 400, 3, 6, 15);
    let forms = SampleForms::assemble(&op, &table, &tau, &psi).unwrap();
    let q = assemble_qn(&op, &table, &tau, psi.spec()).unwrap();
    let m = assemble_mn(&table, psi.spec()).unwrap();
    let c = assemble_cn(&op, &table, psi.spec()).unwrap();
    assert_eq!(q, forms.q);
    assert_eq!(m, forms.m);
    assert_eq!(c, forms.c);
}

#[test]
fn gradients_match_central_differences() {
    let (table, tau, op, psi) = setup(Setting::LN, 300, 4, 6, 6);
    let forms = SampleForms::assemble(&op, &table, &tau, &psi).unwrap();
    let mut rng = rng(9);
    for _ in 0..10 {
        let theta = random_vec(&mut rng, psi.len(), 2.0);
        for form in [&forms.q, &forms.m, &forms.c] {
            let g = form.gradient(&theta);
            for j in 0..theta.len() {
                let h = 1e-5;
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (form.eval(&up) - form.eval(&dn)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()), "{fd} vs {}", g[j]);
            }
        }
    }
}

#[test]
fn q_is_nonnegative_and_zero_at_exact_fit() {
    let (table, tau, op, psi) = setup(Setting::Model1, 300, 5, 2, 2);
    let forms = SampleForms::assemble(&op, &table, &tau, &psi).unwrap();
    let mut rng = rng(1);
    for _ in 0..50 {
        assert!(forms.q.eval(&random_vec(&mut rng, 2, 10.0)) >= -1e-12);
    }
    // τ = ψ'θ* on every row makes θ* a zero of Q.
    let star = DVector::from_vec(vec![0.4, -1.3]);
    let exact = TauValues::from_values(
        (0..table.n())
            .map(|i| table.r(i).then(|| psi.eval(&table.xz_point(i)).unwrap().iter().zip(star.iter()).map(|(a, b)| a * b).sum()))
            .collect(),
    );
    let forms = SampleForms::assemble(&op, &table, &exact, &psi).unwrap();
    assert!(forms.q.eval(&star).abs() < 1e-12);
}
