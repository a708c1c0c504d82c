//! Closed-loop properties of the joint filter in the load-transport scenario.

use octolift::harness::{run_experiment, ExperimentConfig};

#[test]
fn mass_uncertainty_shrinks_by_settle_time() {
    let cfg = ExperimentConfig::default();
    let out = run_experiment(&cfg).unwrap();
    let settle = out.stats.mass_std_settle.expect("horizon covers the settle time");
    assert!(settle < out.stats.mass_std_initial, "{settle} vs {}", out.stats.mass_std_initial);
}

#[test]
fn covariance_stays_positive_semidefinite() {
    let cfg = ExperimentConfig::default();
    let out = run_experiment(&cfg).unwrap();
    assert!(out.stats.min_cov_eigenvalue >= -1e-10, "{}", out.stats.min_cov_eigenvalue);
    assert_eq!(out.stats.jitter_retries, 0);
}

#[test]
fn disturbance_estimate_rises_monotonically_after_onset() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.noise = false;
    cfg.run.horizon = 22.0;
    let out = run_experiment(&cfg).unwrap();
    let window: Vec<f64> = out
        .log
        .rows
        .iter()
        .filter(|r| (20.0..=22.0).contains(&r.t))
        .map(|r| r.dhat[0])
        .collect();
    assert!(window.len() > 100);
    assert!(window.windows(2).all(|w| w[1] > w[0]));
    assert!(*window.last().unwrap() > 15.0 && *window.last().unwrap() < 30.0);
}

#[test]
fn noise_free_filter_recovers_mass() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.noise = false;
    let out = run_experiment(&cfg).unwrap();
    let last = out.log.rows.last().unwrap();
    assert!((last.phat[0] - cfg.load.mass).abs() < 1.0, "{}", last.phat[0]);
}
