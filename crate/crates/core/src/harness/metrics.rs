//! Summary statistics of a trajectory log and the pass/fail bounds applied to
//! them by the CLI.

use serde::{Deserialize, Serialize};

use crate::harness::config::ExperimentConfig;
use crate::harness::log::TrajectoryLog;

/// Increase of `V_c` between consecutive samples counted as a violation.
pub const LYAPUNOV_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub steps: usize,
    /// Position RMSE per axis over the final reference period (m).
    pub rmse_final_period: [f64; 3],
    /// `|q - q_ref|` per axis at the last logged sample (m).
    pub terminal_position_error: [f64; 3],
    /// `|m_hat - m_L|` and `|r_hat - r_L|` at the last sample.
    pub terminal_parameter_error: [f64; 2],
    /// Largest `|m_hat - m_L|` and `|r_hat - r_L|` after the settle time.
    pub max_parameter_error_after_settle: Option<[f64; 2]>,
    /// Mean `|d_hat - magnitude|` over the disturbance windows on the
    /// horizontal force channels, onset excluded (N).
    pub disturbance_tracking_error: Option<f64>,
    /// Mean `|d_hat_x|` and `|d_hat_y|` over the quiet window (N).
    pub quiet_disturbance_mean: Option<[f64; 2]>,
    pub max_alloc_residual: f64,
    /// Samples `k >= 1` with `V_c(k+1) - V_c(k) > 1e-6`.
    pub lyapunov_violations: usize,
    pub max_lyapunov_increase: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn compute_metrics(log: &TrajectoryLog, cfg: &ExperimentConfig) -> MetricsReport {
    let rows = &log.rows;
    let pos_err = |k: usize| {
        let r = &rows[k];
        let reference = cfg.reference.sample(r.t);
        [0, 1, 2].map(|i| r.q[i] - reference.position[i])
    };

    let mut rmse = [0.0; 3];
    let mut terminal = [0.0; 3];
    let mut terminal_param = [0.0; 2];
    if let Some(last) = rows.last() {
        let start = last.t - cfg.reference.period;
        let idx: Vec<usize> = (0..rows.len()).filter(|&k| rows[k].t > start + 1e-9).collect();
        for (axis, out) in rmse.iter_mut().enumerate() {
            let ms = mean(idx.iter().map(|&k| pos_err(k)[axis].powi(2))).unwrap_or(0.0);
            *out = ms.sqrt();
        }
        terminal = pos_err(rows.len() - 1).map(f64::abs);
        terminal_param = [
            (last.phat[0] - cfg.load.mass).abs(),
            (last.phat[1] - cfg.load.half_edge).abs(),
        ];
    }

    let settled: Vec<_> = rows.iter().filter(|r| r.t >= cfg.run.settle_time).collect();
    let max_parameter_error_after_settle = (!settled.is_empty()).then(|| {
        settled.iter().fold([0.0f64; 2], |acc, r| {
            [
                acc[0].max((r.phat[0] - cfg.load.mass).abs()),
                acc[1].max((r.phat[1] - cfg.load.half_edge).abs()),
            ]
        })
    });

    let horizontal: Vec<_> = cfg.disturbance.windows.iter().filter(|w| w.channel < 2).collect();
    let disturbance_tracking_error = mean(rows.iter().flat_map(|r| {
        horizontal
            .iter()
            .filter(move |w| w.t_start + cfg.run.onset_skip <= r.t && r.t <= w.t_end)
            .map(move |w| (r.dhat[w.channel] - w.magnitude).abs())
    }));

    let [q0, q1] = cfg.run.quiet_window;
    let quiet: Vec<_> = rows.iter().filter(|r| q0 <= r.t && r.t <= q1).collect();
    let quiet_disturbance_mean = (!quiet.is_empty()).then(|| {
        [0, 1].map(|c| mean(quiet.iter().map(|r| r.dhat[c].abs())).unwrap_or(0.0))
    });

    let max_alloc_residual = rows.iter().map(|r| r.alloc_residual).fold(0.0, f64::max);
    let mut lyapunov_violations = 0;
    let mut max_lyapunov_increase = f64::NEG_INFINITY;
    for k in 1..rows.len().saturating_sub(1) {
        let inc = rows[k + 1].vc - rows[k].vc;
        max_lyapunov_increase = max_lyapunov_increase.max(inc);
        if inc > LYAPUNOV_TOL {
            lyapunov_violations += 1;
        }
    }
    if !max_lyapunov_increase.is_finite() {
        max_lyapunov_increase = 0.0;
    }

    MetricsReport {
        steps: rows.len(),
        rmse_final_period: rmse,
        terminal_position_error: terminal,
        terminal_parameter_error: terminal_param,
        max_parameter_error_after_settle,
        disturbance_tracking_error,
        quiet_disturbance_mean,
        max_alloc_residual,
        lyapunov_violations,
        max_lyapunov_increase,
    }
}

/// Pass/fail thresholds applied by the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub alloc_residual: f64,
    pub mass_band: f64,
    pub half_edge_band: f64,
    pub disturbance_tracking: f64,
    pub quiet_disturbance: f64,
    pub rmse: f64,
    pub terminal_error: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            alloc_residual: 1e-9,
            mass_band: 10.0,
            half_edge_band: 0.1,
            disturbance_tracking: 3.0,
            quiet_disturbance: 3.0,
            rmse: 0.15,
            terminal_error: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub value: String,
}

fn check(name: &'static str, passed: bool, value: impl std::fmt::Debug) -> Check {
    Check {
        name,
        passed,
        value: format!("{value:?}"),
    }
}

/// Bounds relevant to the run mode: estimation bounds when the filter is
/// active, the stability bounds for the noise-free run on true parameters.
pub fn evaluate_bounds(m: &MetricsReport, cfg: &ExperimentConfig, b: &Bounds) -> Vec<Check> {
    let mut out = vec![check(
        "alloc_residual",
        m.max_alloc_residual <= b.alloc_residual,
        m.max_alloc_residual,
    )];
    if m.steps == 0 {
        return out;
    }
    if cfg.run.true_params {
        if !cfg.run.noise && cfg.disturbance.windows.is_empty() {
            out.push(check("lyapunov", m.lyapunov_violations == 0, m.lyapunov_violations));
        }
        out.push(check(
            "terminal_error",
            m.terminal_position_error.iter().all(|e| *e < b.terminal_error),
            m.terminal_position_error,
        ));
        return out;
    }
    if let Some(e) = m.max_parameter_error_after_settle {
        out.push(check(
            "parameter_band",
            e[0] <= b.mass_band && e[1] <= b.half_edge_band,
            e,
        ));
    }
    if let Some(e) = m.disturbance_tracking_error {
        out.push(check("disturbance_tracking", e <= b.disturbance_tracking, e));
    }
    if let Some(e) = m.quiet_disturbance_mean {
        out.push(check("quiet_disturbance", e[0] <= b.quiet_disturbance, e));
    }
    out.push(check(
        "rmse_final_period",
        m.rmse_final_period.iter().all(|e| *e <= b.rmse),
        m.rmse_final_period,
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::log::LogRow;

    fn synthetic(cfg: &ExperimentConfig, offset: f64) -> TrajectoryLog {
        let mut log = TrajectoryLog::default();
        for k in 0..cfg.num_steps() {
            let t = k as f64 * cfg.run.sample_time;
            let r = cfg.reference.sample(t);
            let mut row = LogRow {
                t,
                ..Default::default()
            };
            for i in 0..3 {
                row.q[i] = r.position[i] + offset;
            }
            row.phat[0] = cfg.load.mass + 1.0;
            row.phat[1] = cfg.load.half_edge;
            row.dhat[0] = cfg.disturbance.force(t)[0];
            row.vc = 1.0 / (1.0 + t);
            log.push(row);
        }
        log
    }

    #[test]
    fn constant_offset_metrics() {
        let cfg = ExperimentConfig::default();
        let m = compute_metrics(&synthetic(&cfg, 0.05), &cfg);
        assert_eq!(m.steps, 8000);
        for e in m.rmse_final_period {
            assert!((e - 0.05).abs() < 1e-9);
        }
        assert!((m.terminal_parameter_error[0] - 1.0).abs() < 1e-12);
        assert_eq!(m.disturbance_tracking_error, Some(0.0));
        assert_eq!(m.quiet_disturbance_mean, Some([0.0, 0.0]));
        assert_eq!(m.lyapunov_violations, 0);
        assert!(evaluate_bounds(&m, &cfg, &Bounds::default()).iter().all(|c| c.passed));
    }

    #[test]
    fn large_offset_fails_rmse() {
        let cfg = ExperimentConfig::default();
        let m = compute_metrics(&synthetic(&cfg, 0.5), &cfg);
        let checks = evaluate_bounds(&m, &cfg, &Bounds::default());
        assert!(!checks.iter().find(|c| c.name == "rmse_final_period").unwrap().passed);
    }

    #[test]
    fn empty_log() {
        let cfg = ExperimentConfig::default();
        let m = compute_metrics(&TrajectoryLog::default(), &cfg);
        assert_eq!(m.steps, 0);
        assert!(evaluate_bounds(&m, &cfg, &Bounds::default()).iter().all(|c| c.passed));
    }
}
