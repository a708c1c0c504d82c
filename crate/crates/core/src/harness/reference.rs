//! Periodic position reference `offset + a cos(w t) + b sin(w t)` per axis
//! with a constant yaw reference, and its analytic derivatives.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::control::ReferenceSample;
use crate::error::{Error, Result};
use crate::kinematics::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTrajectory {
    /// s
    pub period: f64,
    /// m
    pub offset: [f64; 3],
    /// m
    pub cos_amplitude: [f64; 3],
    /// m
    pub sin_amplitude: [f64; 3],
    /// rad
    pub yaw: f64,
}

impl Default for ReferenceTrajectory {
    fn default() -> Self {
        Self {
            period: 40.0,
            offset: [0.0, 0.0, 9.0],
            cos_amplitude: [2.0, 0.0, -8.0],
            sin_amplitude: [0.0, 2.0, 0.0],
            yaw: 0.0,
        }
    }
}

impl ReferenceTrajectory {
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("reference.period", "must be finite and > 0"));
        }
        let all = self
            .offset
            .iter()
            .chain(&self.cos_amplitude)
            .chain(&self.sin_amplitude)
            .chain(std::iter::once(&self.yaw));
        if !all.into_iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("reference", "entries must be finite"));
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> ReferenceSample {
        let w = TAU / self.period;
        let (s, c) = (w * t).sin_cos();
        let a = Vec3::from(self.cos_amplitude);
        let b = Vec3::from(self.sin_amplitude);
        ReferenceSample {
            position: Vec3::from(self.offset) + a * c + b * s,
            velocity: (b * c - a * s) * w,
            acceleration: -(a * c + b * s) * (w * w),
            yaw: self.yaw,
            yaw_rate: 0.0,
            yaw_accel: 0.0,
        }
    }
}
