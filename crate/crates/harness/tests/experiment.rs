use rbl_core::approx::Method;
use rbl_core::harness::{default_scenario, rmse, summarize, TrialSettings};
use rbl_core::measurement::NormMode;
use rbl_harness::config::ExperimentConfig;
use rbl_harness::experiment::{run_rmse_experiment, run_trials};
use rbl_harness::output::write_rmse_csv;

fn small_config(trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        phi_theta_deg2: vec![10.0, 100.0],
        sigmas: vec![0.0, 0.1, 1.0],
        trials,
        seed,
        ..ExperimentConfig::default()
    }
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let mut out = Vec::new();
    write_rmse_csv(&run_rmse_experiment(cfg).unwrap(), &mut out).unwrap();
    out
}

#[test]
fn same_seed_gives_identical_csv() {
    let cfg = small_config(20, 5);
    let a = csv_bytes(&cfg);
    assert_eq!(a, csv_bytes(&cfg));
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(
        "phi_theta_deg2,sigma,method,rmse_rotation_deg,rmse_translation_m,diverged,mean_iterations\n"
    ));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);
    assert_ne!(csv_bytes(&small_config(20, 6)), csv_bytes(&cfg));
}

#[test]
fn split_runs_match_a_single_run() {
    let sc = default_scenario();
    let settings = TrialSettings::new(&sc, 0.1);
    let whole = run_trials(&sc, &settings, 11, 0, 0..40).unwrap();
    let mut halves = run_trials(&sc, &settings, 11, 0, 0..20).unwrap();
    halves.extend(run_trials(&sc, &settings, 11, 0, 20..40).unwrap());
    assert_eq!(whole, halves);
    let a = summarize(&whole, &Method::ALL, 0.1, 10.0);
    let b = summarize(&halves, &Method::ALL, 0.1, 10.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.rmse_rotation_deg - y.rmse_rotation_deg).abs() < 1e-9);
        assert!((x.rmse_translation_m - y.rmse_translation_m).abs() < 1e-9);
    }
}

#[test]
fn trials_draw_from_distinct_streams() {
    let sc = default_scenario();
    let settings = TrialSettings::new(&sc, 0.1);
    let records = run_trials(&sc, &settings, 0, 0, 0..8).unwrap();
    for (i, a) in records.iter().enumerate() {
        assert_eq!(a.index, i);
        for b in &records[i + 1..] {
            assert_ne!(a.truth, b.truth);
        }
    }
}

#[test]
fn every_trial_is_counted_once() {
    let rows = run_rmse_experiment(&small_config(15, 2)).unwrap();
    for row in &rows {
        assert_eq!(row.diverged + row.included, 15, "{row:?}");
        assert!(row.rmse_rotation_deg >= 0.0 && row.rmse_translation_m >= 0.0);
    }
}

#[test]
fn noiseless_runs_find_the_translation() {
    let cfg = ExperimentConfig {
        phi_theta_deg2: vec![10.0],
        sigmas: vec![0.0],
        trials: 10,
        norm_mode: NormMode::Oracle,
        ..ExperimentConfig::default()
    };
    for row in run_rmse_experiment(&cfg).unwrap() {
        assert!(row.rmse_translation_m < 1e-2, "{row:?}");
    }
}

#[test]
fn quadratic_beats_small_angle_at_moderate_noise() {
    let cfg = ExperimentConfig {
        phi_theta_deg2: vec![10.0],
        sigmas: vec![0.1],
        trials: 200,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let rows = run_rmse_experiment(&cfg).unwrap();
    let get = |m| rows.iter().find(|r| r.method == m).unwrap().rmse_rotation_deg;
    let (small, quad) = (get(Method::SmallAngle), get(Method::Quadratic));
    assert!(quad < small, "quadratic {quad} vs small-angle {small}");
}

#[test]
fn rmse_matches_a_naive_loop() {
    let est: Vec<[f64; 3]> = (0..50).map(|i| [i as f64 * 0.1, -(i as f64), 2.0]).collect();
    let truth: Vec<[f64; 3]> = (0..50).map(|i| [1.0, i as f64 * 0.3, (i % 7) as f64]).collect();
    let mut sum = 0.0;
    for i in 0..50 {
        for k in 0..3 {
            sum += (est[i][k] - truth[i][k]).powi(2);
        }
    }
    assert!((rmse(&est, &truth).unwrap() - (sum / 50.0).sqrt()).abs() < 1e-12);
}
