//! W-infinity cascade controller: Riccati synthesis, control laws and
//! thrust allocation.

pub mod allocation;
pub mod care;
pub mod cascade;
pub mod laws;

pub use allocation::{thrust_allocation, ThrustAllocation};
pub use care::{build_care_matrices, solve_care, CareMatrices, RiccatiSolution, WeightSet};
pub use cascade::{CascadeController, CascadeOutput, ReferenceSample};
pub use laws::{attitude_allocation, rotational_control, translational_control, AttitudeAllocation};
