//! Piecewise-constant exogenous generalized forces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Vec6;

/// Constant force on one generalized coordinate over `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceWindow {
    /// Generalized coordinate index, 0 = x ... 5 = psi.
    pub channel: usize,
    /// N or N m
    pub magnitude: f64,
    /// s
    pub t_start: f64,
    /// s
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfile {
    pub windows: Vec<DisturbanceWindow>,
}

impl Default for DisturbanceProfile {
    fn default() -> Self {
        Self {
            windows: vec![DisturbanceWindow {
                channel: 0,
                magnitude: 30.0,
                t_start: 20.0,
                t_end: 30.0,
            }],
        }
    }
}

impl DisturbanceProfile {
    pub fn none() -> Self {
        Self { windows: vec![] }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, w) in self.windows.iter().enumerate() {
            let field = format!("disturbance.windows[{i}]");
            if w.channel >= 6 {
                return Err(Error::invalid(field, "channel must be in 0..6"));
            }
            if !(w.magnitude.is_finite() && w.t_start.is_finite() && w.t_end.is_finite()) {
                return Err(Error::invalid(field, "entries must be finite"));
            }
            if !(0.0 <= w.t_start && w.t_start <= w.t_end) {
                return Err(Error::invalid(field, "need 0 <= t_start <= t_end"));
            }
        }
        Ok(())
    }

    /// Sum of the active windows at time `t` (bounds inclusive).
    pub fn force(&self, t: f64) -> Vec6 {
        let mut zeta = Vec6::zeros();
        for w in &self.windows {
            if w.t_start <= t && t <= w.t_end {
                zeta[w.channel] += w.magnitude;
            }
        }
        zeta
    }
}
