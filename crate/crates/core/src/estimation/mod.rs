//! Unscented estimation: a generic unscented transform and the joint
//! state/disturbance/parameter filter built on it.

pub mod jukf;
pub mod ukf;

pub use jukf::{
    measurement_model, process_model, AugmentedState, GaussianBelief, Jukf, MeasVec, NoiseConfig,
    AUG_DIM, MEAS_DIM,
};
pub use ukf::{cholesky_lower, sigma_points, Belief, Innovation};
