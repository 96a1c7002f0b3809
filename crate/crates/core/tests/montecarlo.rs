use shadowmean::montecarlo::{summarize, write_reps_csv, write_summary_csv};
use shadowmean::*;

fn small_plan(setting: Setting, reps: usize) -> ExperimentPlan {
    ExperimentPlan::new(ScenarioSpec::new(setting, 400, 0), reps, 31)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let plan = small_plan(Setting::Model1, 24);
    let one = run_experiment_with_threads(&plan, Some(1)).unwrap();
    let four = run_experiment_with_threads(&plan, Some(4)).unwrap();
    let default = run_experiment(&plan).unwrap();
    let bits = |o: &ExperimentOutput| -> Vec<(usize, u64)> {
        o.records.iter().map(|r| (r.rep, r.estimate.to_bits())).collect()
    };
    assert_eq!(bits(&one), bits(&four));
    assert_eq!(bits(&one), bits(&default));
    assert_eq!(one.summary, four.summary);
}

#[test]
fn summary_is_recomputable_from_records() {
    let plan = small_plan(Setting::Model2, 30);
    let out = run_experiment(&plan).unwrap();
    assert_eq!(out.records.len(), 30 * EstimatorKind::ALL.len());
    for kind in EstimatorKind::ALL {
        let mine: Vec<&RepRecord> = out.records.iter().filter(|r| r.estimator == kind && !r.failed()).collect();
        let row = out.summary.get(kind).unwrap();
        assert_eq!(row.used + row.failures, 30);
        let mean = mine.iter().map(|r| r.estimate).sum::<f64>() / mine.len() as f64;
        assert!((row.bias - (mean - 0.5)).abs() < 1e-12);
        if kind.has_ci() {
            let cp = mine.iter().filter(|r| r.ci_lower.unwrap() <= 0.5 && 0.5 <= r.ci_upper.unwrap()).count() as f64
                / mine.len() as f64;
            assert_eq!(row.cp, Some(cp));
        } else {
            assert_eq!(row.cp, None);
        }
        assert_eq!(summarize(&out.records, kind, 0.5), *row);
    }
}

#[test]
fn plans_are_reproducible_and_seed_sensitive() {
    let mut plan = small_plan(Setting::LL, 6);
    plan.estimators = vec![EstimatorKind::RepDb, EstimatorKind::MarReg];
    let a = run_experiment(&plan).unwrap();
    let b = run_experiment(&plan).unwrap();
    assert_eq!(a.records, b.records);
    plan.base_seed += 1;
    let c = run_experiment(&plan).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn pilot_tuning_is_recorded_and_optional() {
    let plan = small_plan(Setting::Model1, 4);
    let tuned = run_experiment(&plan).unwrap();
    let chosen = tuned.summary.tuning.unwrap();
    assert_eq!(tuned.config.q_n, Some(chosen.q_n));
    let mut fixed = plan.clone();
    fixed.tuning = None;
    let out = run_experiment(&fixed).unwrap();
    assert!(out.summary.tuning.is_none());
    assert_eq!(out.config.q_n, None);
}

#[test]
fn invalid_plans_are_rejected() {
    let mut plan = small_plan(Setting::Model1, 0);
    assert!(matches!(run_experiment(&plan), Err(Error::InvalidSpec(_))));
    plan.reps = 2;
    plan.estimators.clear();
    assert!(run_experiment(&plan).is_err());
    plan.estimators = vec![EstimatorKind::Rep];
    plan.alpha = 1.5;
    assert!(run_experiment(&plan).is_err());
}

#[test]
fn csv_outputs_have_fixed_headers() {
    let mut plan = small_plan(Setting::Model1, 3);
    plan.estimators = vec![EstimatorKind::Rep, EstimatorKind::RepDb];
    let out = run_experiment(&plan).unwrap();
    let mut reps = Vec::new();
    write_reps_csv(&out.records, &mut reps).unwrap();
    let reps = String::from_utf8(reps).unwrap();
    let mut lines = reps.lines();
    assert_eq!(lines.next(), Some("rep,estimator,estimate,ci_lower,ci_upper,converged"));
    assert!(lines.next().unwrap().starts_with("0,REP,"));
    assert!(reps.contains(",NA,NA,"));
    let mut summary = Vec::new();
    write_summary_csv(&out.summary, &mut summary).unwrap();
    let summary = String::from_utf8(summary).unwrap();
    assert!(summary.starts_with("estimator,bias,sd,cp,mean_ci_width,failures\nREP,"));
    assert_eq!(summary.lines().count(), 3);
}
