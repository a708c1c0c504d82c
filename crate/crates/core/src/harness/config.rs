//! Experiment configuration and its TOML file form.
//!
//! Sections: `run`, `vehicle`, `load`, `controller`, `jukf`, `reference`,
//! `disturbance`. Unknown keys are rejected; every key is required.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

use crate::control::WeightSet;
use crate::error::{Error, Result};
use crate::estimation::NoiseConfig;
use crate::harness::disturbance::DisturbanceProfile;
use crate::harness::reference::ReferenceTrajectory;
use crate::multibody::{LoadParams, VehicleParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// s
    pub sample_time: f64,
    /// s
    pub horizon: f64,
    pub seed: u64,
    /// Draw measurement noise.
    pub noise: bool,
    /// Feed the true state and load to the controller instead of the filter
    /// estimate.
    pub true_params: bool,
    /// True initial generalized coordinates.
    pub initial_q: [f64; 6],
    /// True initial generalized velocities.
    pub initial_qdot: [f64; 6],
    /// Load-parameter band settling time used by the metrics (s).
    pub settle_time: f64,
    /// Skipped onset of every disturbance window in the metrics (s).
    pub onset_skip: f64,
    /// Disturbance-free window `[start, end]` used by the metrics (s).
    pub quiet_window: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_time: 0.01,
            horizon: 80.0,
            seed: 2021,
            noise: true,
            true_params: false,
            initial_q: [1.9, 0.0, 0.8, 0.0, 0.0, PI / 6.0],
            initial_qdot: [0.0; 6],
            settle_time: 60.0,
            onset_skip: 3.0,
            quiet_window: [40.0, 60.0],
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub translational: WeightSet,
    pub rotational: WeightSet,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            translational: WeightSet::translational(),
            rotational: WeightSet::rotational(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub vehicle: VehicleParams,
    /// True load carried by the simulated vehicle.
    pub load: LoadParams,
    pub controller: ControllerConfig,
    pub jukf: NoiseConfig,
    pub reference: ReferenceTrajectory,
    pub disturbance: DisturbanceProfile,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let r = &self.run;
        if !(r.sample_time.is_finite() && r.sample_time > 0.0) {
            return Err(Error::invalid("run.sample_time", "must be finite and > 0"));
        }
        if !(r.horizon.is_finite() && r.horizon >= 0.0) {
            return Err(Error::invalid("run.horizon", "must be finite and >= 0"));
        }
        if !r.initial_q.iter().chain(&r.initial_qdot).all(|v| v.is_finite()) {
            return Err(Error::invalid("run.initial_q", "entries must be finite"));
        }
        if (r.initial_q[4]).cos().abs() < crate::kinematics::COS_THETA_LIMIT {
            return Err(Error::invalid("run.initial_q", "pitch at the Euler singularity"));
        }
        if !(r.quiet_window[0] <= r.quiet_window[1]) {
            return Err(Error::invalid("run.quiet_window", "need start <= end"));
        }
        if !(r.settle_time.is_finite() && r.onset_skip.is_finite() && r.onset_skip >= 0.0) {
            return Err(Error::invalid("run.settle_time", "must be finite"));
        }
        self.vehicle.validate()?;
        self.load.validate()?;
        self.controller.translational.validate("controller.translational")?;
        self.controller.rotational.validate("controller.rotational")?;
        self.jukf.validate()?;
        self.reference.validate()?;
        self.disturbance.validate()
    }

    /// Number of control samples over the horizon.
    pub fn num_steps(&self) -> usize {
        (self.run.horizon / self.run.sample_time).round() as usize
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }
}
