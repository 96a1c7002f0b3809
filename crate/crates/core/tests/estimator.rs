use shadowmean::*;

/// The Case I configuration cross-validation settles on: affine `ψ`,
/// quadratic `φ`, small slack and a wide Sobolev ball.
fn case_one_config() -> EstimatorConfig {
    let mut cfg = EstimatorConfig::with_sizes(6, 21);
    cfg.solver.c0 = 0.01;
    cfg.solver.k_radius = 100.0;
    cfg
}

fn case_two_config() -> EstimatorConfig {
    let mut cfg = EstimatorConfig::with_sizes(3, 3);
    cfg.solver.c0 = 0.01;
    cfg
}

fn scale_outcome(t: &ObservationTable, s: f64) -> ObservationTable {
    let x: Vec<f64> = (0..t.n()).flat_map(|i| t.x_row(i).to_vec()).collect();
    let y = t.outcomes().iter().map(|v| v.map(|v| v * s)).collect();
    ObservationTable::new(t.responses().to_vec(), y, x, t.d(), t.shadow().to_vec()).unwrap()
}

#[test]
fn case_one_linear_mean_is_recovered() {
    let t = ScenarioSpec::new(Setting::LL, 1000, 21).generate().unwrap().table;
    let r = estimate(&t, &TauSpec::Outcome, &case_one_config()).unwrap();
    let tol = 3.0 * r.sigma_hat / (t.n() as f64).sqrt();
    assert!((r.mu_repa - 6.0).abs() <= tol, "{} ± {tol}", r.mu_repa);
}

#[test]
fn report_is_internally_consistent() {
    let t = ScenarioSpec::new(Setting::Model2, 800, 3).generate().unwrap().table;
    let r = estimate(&t, &TauSpec::Outcome, &case_two_config()).unwrap();
    assert!(r.sigma_hat >= 0.0);
    assert!(r.ci_lower() <= r.mu_repa && r.mu_repa <= r.ci_upper());
    assert!((r.mu_repa - (r.mu_rep + r.r_hat)).abs() < 1e-15);
    let half = 1.959963984540054 * r.sigma_hat / (800f64).sqrt();
    assert!((r.ci_upper() - r.mu_repa - half).abs() < 1e-12);
    let d = &r.diagnostics;
    assert_eq!((d.n, d.complete, d.q_n, d.k_n), (800, t.complete_count(), 3, 3));
    assert!(d.c_n >= d.q_min);
    assert!(d.delta.kkt_residual <= 1e-8 && d.h.kkt_residual <= 1e-8);
}

#[test]
fn interval_width_shrinks_at_root_n() {
    let full = ScenarioSpec::new(Setting::LL, 8000, 5).generate().unwrap().table;
    let quarter = full.select(&(0..2000).collect::<Vec<_>>());
    let cfg = case_one_config();
    let w = |t: &ObservationTable| {
        let r = estimate(t, &TauSpec::Outcome, &cfg).unwrap();
        r.ci_upper() - r.ci_lower()
    };
    let ratio = w(&quarter) / w(&full);
    assert!((ratio / 2.0 - 1.0).abs() <= 0.15, "{ratio}");
}

#[test]
fn row_order_does_not_matter() {
    let t = ScenarioSpec::new(Setting::NL, 600, 8).generate().unwrap().table;
    let mut order: Vec<usize> = (0..t.n()).rev().collect();
    order.rotate_left(137);
    let shuffled = t.select(&order);
    let cfg = case_one_config();
    let a = estimate(&t, &TauSpec::Outcome, &cfg).unwrap();
    let b = estimate(&shuffled, &TauSpec::Outcome, &cfg).unwrap();
    assert!((a.mu_repa - b.mu_repa).abs() <= 1e-10);
    assert!((a.mu_rep - b.mu_rep).abs() <= 1e-10);
    assert!((a.sigma_hat - b.sigma_hat).abs() <= 1e-10);
}

#[test]
fn outcome_scaling_carries_through() {
    // τ → sτ scales the slack by s² and the representer by s. ĥ does not
    // involve τ, so the ball must stay wide enough to leave it interior.
    let t = ScenarioSpec::new(Setting::Model1, 700, 4).generate().unwrap().table;
    let mut cfg = case_two_config();
    cfg.solver.k_radius = 1000.0;
    let base = estimate(&t, &TauSpec::Outcome, &cfg).unwrap();
    for s in [0.1, 10.0] {
        let mut scaled_cfg = cfg.clone();
        scaled_cfg.solver.c0 *= s * s;
        scaled_cfg.solver.k_radius *= s;
        let r = estimate(&scale_outcome(&t, s), &TauSpec::Outcome, &scaled_cfg).unwrap();
        assert!((r.mu_repa - s * base.mu_repa).abs() <= 1e-8 * s, "s={s}");
        assert!((r.sigma_hat - s * base.sigma_hat).abs() <= 1e-8 * s, "s={s}");
    }
}

#[test]
fn covariate_times_outcome_functional() {
    let truth = ScenarioSpec::new(Setting::LL, 1500, 12).generate().unwrap();
    let t = truth.table;
    let r = estimate(&t, &TauSpec::CovariateTimesOutcome(2), &case_one_config()).unwrap();
    let oracle = (0..t.n()).map(|i| t.x_row(i)[1] * truth.y_full[i]).sum::<f64>() / t.n() as f64;
    assert!((r.mu_repa - oracle).abs() <= 4.0 * r.sigma_hat / (t.n() as f64).sqrt());
}

#[test]
fn named_column_functional_matches_outcome() {
    let t = ScenarioSpec::new(Setting::Model2, 500, 2).generate().unwrap().table;
    let with_col = t.clone().with_column("w", t.outcomes().to_vec()).unwrap();
    let cfg = case_two_config();
    let a = estimate(&t, &TauSpec::Outcome, &cfg).unwrap();
    let b = estimate(&with_col, &TauSpec::Column("w".into()), &cfg).unwrap();
    assert_eq!(a.mu_repa, b.mu_repa);
}

#[test]
fn too_few_complete_cases_is_reported() {
    let t = ObservationTable::new(
        vec![true, false, false, true],
        vec![Some(1.0), None, None, Some(2.0)],
        Vec::new(),
        0,
        vec![0.0, 0.3, 0.6, 1.0],
    )
    .unwrap();
    let err = estimate(&t, &TauSpec::Outcome, &EstimatorConfig::with_sizes(3, 3)).unwrap_err();
    assert!(matches!(err.root(), Error::TooFewCompleteCases { .. }), "{err}");
}

#[test]
fn invalid_sizes_are_rejected() {
    let t = ScenarioSpec::new(Setting::Model1, 100, 1).generate().unwrap().table;
    let err = estimate(&t, &TauSpec::Outcome, &EstimatorConfig::with_sizes(4, 2)).unwrap_err();
    assert!(matches!(err.root(), Error::InvalidSpec(_)));
}

#[test]
fn fit_exposes_the_fitted_functions() {
    let t = ScenarioSpec::new(Setting::Model1, 1000, 6).generate().unwrap().table;
    let f = fit(&t, &TauSpec::Outcome, &case_two_config()).unwrap();
    assert_eq!(f.delta.theta().len(), 3);
    assert_eq!(f.h.theta().len(), 3);
    let scaled = f.scaler.apply(&t).unwrap();
    let n = t.n() as f64;
    let plug = (0..t.n())
        .map(|i| t.y(i).unwrap_or_else(|| f.delta.eval(&scaled.xz_point(i)).unwrap()))
        .sum::<f64>()
        / n;
    assert!((plug - f.report.mu_rep).abs() < 1e-12);
}
