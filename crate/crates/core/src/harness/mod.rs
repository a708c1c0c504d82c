//! Scenario runner: configuration, reference and disturbance generation,
//! sensor simulation, the closed loop, logging and metrics.

pub mod checks;
pub mod config;
pub mod disturbance;
pub mod log;
pub mod metrics;
pub mod reference;
pub mod run;
pub mod sensors;

pub use config::{ControllerConfig, ExperimentConfig, RunConfig};
pub use disturbance::{DisturbanceProfile, DisturbanceWindow};
pub use log::{LogRow, TrajectoryLog};
pub use metrics::{compute_metrics, evaluate_bounds, Bounds, Check, MetricsReport};
pub use reference::ReferenceTrajectory;
pub use run::{integrate_truth, run_experiment, ControlEstimate, Experiment, RunOutput, RunStats};
pub use sensors::SensorModel;
