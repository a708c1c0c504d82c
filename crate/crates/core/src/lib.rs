//! Octocopter heavy-load transport: Euler-Lagrange dynamics with a rigidly
//! attached cubic load, a cascaded W-infinity tracking controller, and a
//! joint unscented Kalman filter that estimates states, horizontal
//! disturbance forces and the load mass and size.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod kinematics;
pub mod multibody;

pub use error::{Error, Result};
