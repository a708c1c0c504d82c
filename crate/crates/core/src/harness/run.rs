//! Closed-loop simulation: measure, estimate, control, integrate, log.

use nalgebra::Vector2;

use crate::control::{CascadeController, CascadeOutput};
use crate::error::{Error, Result};
use crate::estimation::{AugmentedState, Jukf, MeasVec};
use crate::harness::config::ExperimentConfig;
use crate::harness::log::{LogRow, TrajectoryLog};
use crate::harness::metrics::{compute_metrics, MetricsReport};
use crate::harness::sensors::SensorModel;
use crate::kinematics::{GeneralizedState, Vec6};
use crate::multibody::{LoadParams, Plant, Thrusts};

/// One forward-Euler step of the true plant.
pub fn integrate_truth(
    plant: &Plant,
    state: &GeneralizedState,
    tau: &Thrusts,
    zeta: &Vec6,
    ts: f64,
) -> Result<GeneralizedState> {
    let qdd = plant.forward_dynamics(state, tau, zeta)?;
    Ok(GeneralizedState::new(
        state.q + state.qdot * ts,
        state.qdot + qdd * ts,
    ))
}

/// Run-level diagnostics not carried by the CSV log.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunStats {
    pub max_constraint_violation: f64,
    pub max_alloc_residual: f64,
    pub negative_thrust_steps: usize,
    pub jitter_retries: usize,
    /// Smallest covariance eigenvalue seen after any update.
    pub min_cov_eigenvalue: f64,
    /// Posterior standard deviation of `m_L` at the first sample.
    pub mass_std_initial: f64,
    /// Posterior standard deviation of `m_L` at the settle time.
    pub mass_std_settle: Option<f64>,
}

impl Default for RunStats {
    fn default() -> Self {
        Self {
            max_constraint_violation: 0.0,
            max_alloc_residual: 0.0,
            negative_thrust_steps: 0,
            jitter_retries: 0,
            min_cov_eigenvalue: f64::INFINITY,
            mass_std_initial: f64::NAN,
            mass_std_settle: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: TrajectoryLog,
    pub stats: RunStats,
    pub metrics: MetricsReport,
}

/// Estimate handed to the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEstimate {
    pub state: GeneralizedState,
    pub disturbance: Vector2<f64>,
    pub load: LoadParams,
}

impl From<AugmentedState> for ControlEstimate {
    fn from(a: AugmentedState) -> Self {
        Self {
            state: a.x,
            disturbance: a.d,
            load: a.p,
        }
    }
}

fn step_error(step: usize, time: f64, default_stage: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::InStage { stage, source } => Error::Step {
            step,
            time,
            stage,
            source,
        },
        other => Error::Step {
            step,
            time,
            stage: default_stage,
            source: Box::new(other),
        },
    }
}

pub struct Experiment {
    config: ExperimentConfig,
    plant: Plant,
    controller: CascadeController,
    filter: Jukf,
    sensors: SensorModel,
    truth: GeneralizedState,
    last_tau: Option<Thrusts>,
    step: usize,
    stats: RunStats,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let ts = config.run.sample_time;
        let controller = CascadeController::new(
            config.vehicle.clone(),
            config.controller.translational,
            config.controller.rotational,
            ts,
        )?;
        let filter = Jukf::new(config.vehicle.clone(), &config.jukf, ts)?;
        let sensors = if config.run.noise {
            SensorModel::new(config.run.seed, &config.jukf.measurement_variance)
        } else {
            SensorModel::noiseless()
        };
        let truth = GeneralizedState::new(
            Vec6::from(config.run.initial_q),
            Vec6::from(config.run.initial_qdot),
        );
        Ok(Self {
            plant: Plant::new(config.vehicle.clone(), config.load),
            controller,
            filter,
            sensors,
            truth,
            last_tau: None,
            step: 0,
            stats: RunStats::default(),
            config,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.run.sample_time
    }

    pub fn truth(&self) -> &GeneralizedState {
        &self.truth
    }

    pub fn set_truth(&mut self, state: GeneralizedState) {
        self.truth = state;
    }

    pub fn filter(&self) -> &Jukf {
        &self.filter
    }

    pub fn filter_mut(&mut self) -> &mut Jukf {
        &mut self.filter
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    /// Controller command for a given estimate at the current time; reads no
    /// truth state and leaves the integrators untouched.
    pub fn command(&self, estimate: &ControlEstimate) -> Result<CascadeOutput> {
        let reference = self.config.reference.sample(self.time());
        self.controller
            .evaluate(&estimate.state, &estimate.load, &reference)
    }

    fn estimate(&mut self, y: &MeasVec, zeta: &Vec6) -> Result<ControlEstimate> {
        if self.config.run.true_params {
            return Ok(ControlEstimate {
                state: self.truth,
                disturbance: Vector2::new(zeta[0], zeta[1]),
                load: self.config.load,
            });
        }
        let est = self.filter.step(self.last_tau.as_ref(), y)?;
        let belief = self.filter.belief();
        let min_eig = belief.cov.symmetric_eigenvalues().min();
        self.stats.min_cov_eigenvalue = self.stats.min_cov_eigenvalue.min(min_eig);
        let mass_std = belief.cov[(14, 14)].max(0.0).sqrt();
        if self.step == 0 {
            self.stats.mass_std_initial = mass_std;
        }
        if self.stats.mass_std_settle.is_none() && self.time() >= self.config.run.settle_time {
            self.stats.mass_std_settle = Some(mass_std);
        }
        self.stats.jitter_retries = self.filter.jitter_retries();
        Ok(est.into())
    }

    /// Advances one sample and returns its log row.
    pub fn step(&mut self) -> Result<LogRow> {
        let (k, t) = (self.step, self.time());
        let zeta = self.config.disturbance.force(t);
        let y = self.sensors.measure(&self.truth);
        let est = self
            .estimate(&y, &zeta)
            .map_err(step_error(k, t, "jukf_step"))?;
        let out = self.command(&est).map_err(step_error(k, t, "cascade_step"))?;
        self.controller.commit(&out);

        let a = &out.allocation;
        self.stats.max_constraint_violation = self.stats.max_constraint_violation.max(a.constraint_violation);
        self.stats.max_alloc_residual = self.stats.max_alloc_residual.max(a.residual);
        if a.negative_thrusts > 0 {
            self.stats.negative_thrust_steps += 1;
        }

        let row = LogRow {
            t,
            q: self.truth.q,
            qdot: self.truth.qdot,
            y,
            xhat: est.state.to_stacked(),
            dhat: est.disturbance,
            phat: Vector2::new(est.load.mass, est.load.half_edge),
            tau: out.tau,
            fz: out.total_thrust,
            phir: out.phi_ref,
            thetar: out.theta_ref,
            vc: out.value_c,
            vr: out.value_r,
            alloc_residual: a.residual,
        };

        self.truth = integrate_truth(
            &self.plant,
            &self.truth,
            &out.tau,
            &zeta,
            self.config.run.sample_time,
        )
        .map_err(step_error(k, t, "integrate_truth"))?;
        if !self.truth.is_finite() {
            return Err(step_error(k, t, "integrate_truth")(Error::SolveFailure(
                "true state became non-finite".into(),
            )));
        }
        self.last_tau = Some(out.tau);
        self.step += 1;
        Ok(row)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    let mut exp = Experiment::new(config.clone())?;
    let mut log = TrajectoryLog::default();
    for _ in 0..config.num_steps() {
        log.push(exp.step()?);
    }
    let metrics = compute_metrics(&log, config);
    Ok(RunOutput {
        log,
        stats: exp.stats,
        metrics,
    })
}
