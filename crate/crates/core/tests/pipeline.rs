use instrlearn_core::bias::{bias_report, fit_logistic, me_regression_rows, MeRow};
use instrlearn_core::protocol::{aggregate, generate_exp1, generate_exp2, grade_session};
use instrlearn_core::simulator::{
    expected_proportions, simulate_population, BiasProfile, MeEffects, SimulatedPopulation,
};
use instrlearn_core::GrammarConfig;

fn mixed_profile() -> BiasProfile {
    BiasProfile {
        p_correct: 0.6,
        p_one_to_one: 0.5,
        p_forward_concat: 0.3,
        p_me: 0.7,
        lapse: 0.2,
        me_effects: Some(MeEffects {
            intercept: -3.0,
            per_contradictory: 0.5,
            per_pool_symbol: 0.175,
        }),
        ..BiasProfile::default()
    }
}

fn close(name: &str, got: f64, want: f64) {
    assert!((got - want).abs() <= 0.03, "{name}: got {got:.4}, expected {want:.4}");
}

#[test]
fn curriculum_report_matches_the_profile() {
    let cfg = GrammarConfig::default();
    let spec = generate_exp1(2024);
    let profile = mixed_profile();
    let pop = SimulatedPopulation::uniform(profile.clone(), 1000, 7);
    let sessions = simulate_population(&spec, &pop, &cfg).unwrap();
    let entries: Vec<_> = sessions.iter().map(|s| (&spec, s)).collect();
    let report = bias_report(&entries, &cfg).unwrap().curriculum.unwrap();
    let want = expected_proportions(&spec, &profile, &cfg);
    close("accuracy", report.accuracy.unwrap(), want.accuracy.unwrap());
    close("one-to-one", report.one_to_one_share.unwrap(), want.one_to_one_share.unwrap());
    close("no-reverse", report.kiki_no_reverse_share.unwrap(), want.kiki_no_reverse_share.unwrap());

    let results: Vec<_> = sessions.iter().map(|s| grade_session(&spec, s).unwrap()).collect();
    let summary = aggregate(&results).unwrap();
    for stage in &summary.stages {
        close(&stage.label, stage.mean, profile.p_correct);
    }
}

#[test]
fn trial_report_matches_the_profile() {
    let cfg = GrammarConfig::default();
    let spec = generate_exp2(2024);
    let profile = mixed_profile();
    let pop = SimulatedPopulation::uniform(profile.clone(), 1000, 8);
    let sessions = simulate_population(&spec, &pop, &cfg).unwrap();
    let entries: Vec<_> = sessions.iter().map(|s| (&spec, s)).collect();
    let report = bias_report(&entries, &cfg).unwrap().trials.unwrap();
    let want = expected_proportions(&spec, &profile, &cfg);
    assert_eq!(report.me_cells.len(), 6);
    for (got, exp) in report.me_cells.iter().zip(&want.me_cells) {
        assert_eq!(got.label, exp.label);
        close(&got.label, got.rate, exp.rate);
    }
    close("iconic", report.iconic.unwrap().rate, want.iconic_rate.unwrap());
    close(
        "conflict",
        report.conflict.me_violation_share.unwrap(),
        want.conflict_me_violation.unwrap(),
    );

    let fit = report.regression.unwrap();
    assert!(fit.converged);
    assert!(fit.coefficients[1] > 0.0 && fit.z[1] > 2.0, "{fit:?}");
    assert!(fit.coefficients[2] > 0.0 && fit.z[2] > 2.0, "{fit:?}");

    let rows = me_regression_rows(&entries).unwrap();
    let xs: Vec<Vec<f64>> = rows.iter().map(MeRow::predictors).collect();
    let ys: Vec<bool> = rows.iter().map(|r| r.violated).collect();
    assert_eq!(fit_logistic(&xs, &ys).unwrap(), fit);
}
