//! Self-checks exposed by the CLI: Riccati synthesis quality and allocation
//! exactness on random inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::control::care::{synthesize, CARE_RESIDUAL_TOL};
use crate::control::laws::{attitude_allocation, thrust_force, Partition, ReducedAttitudeDynamics};
use crate::control::{thrust_allocation, WeightSet};
use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::kinematics::{GeneralizedState, Vec3, Vec6};
use crate::multibody::Plant;

/// Stream index of the allocation self-check draws.
const ALLOC_CHECK_STREAM: u64 = 0x200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CareReport {
    pub group: &'static str,
    pub residual_norm: f64,
    pub asymmetry: f64,
    pub min_q_eigenvalue: f64,
    pub max_closed_loop_real: f64,
    pub passed: bool,
}

pub fn care_check(cfg: &ExperimentConfig) -> Result<Vec<CareReport>> {
    let groups: [(&'static str, &WeightSet); 2] = [
        ("translational", &cfg.controller.translational),
        ("rotational", &cfg.controller.rotational),
    ];
    groups
        .into_iter()
        .map(|(group, w)| {
            let sol = synthesize(w)?;
            let asymmetry = (sol.q - sol.q.transpose()).amax();
            let min_q_eigenvalue = sol.q.symmetric_eigenvalues().min();
            let max_closed_loop_real = sol.max_closed_loop_real();
            Ok(CareReport {
                group,
                residual_norm: sol.residual_norm,
                asymmetry,
                min_q_eigenvalue,
                max_closed_loop_real,
                passed: sol.residual_norm <= CARE_RESIDUAL_TOL
                    && asymmetry <= 1e-12
                    && min_q_eigenvalue > 0.0
                    && max_closed_loop_real < 0.0,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocReport {
    pub samples: usize,
    /// Largest deviation of `(f_z, phi_r, theta_r)` from the triple that
    /// generated the commanded force.
    pub max_round_trip_error: f64,
    pub max_constraint_violation: f64,
    pub max_residual: f64,
    pub passed: bool,
}

pub fn alloc_check(cfg: &ExperimentConfig, samples: usize) -> Result<AllocReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.run.seed);
    rng.set_stream(ALLOC_CHECK_STREAM);
    let plant = Plant::new(cfg.vehicle.clone(), cfg.load);
    let mut round_trip = 0.0f64;
    let mut violation = 0.0f64;
    let mut residual = 0.0f64;
    for _ in 0..samples {
        let phi = rng.random_range(-0.6..0.6);
        let theta = rng.random_range(-0.6..0.6);
        let fz = rng.random_range(200.0..4000.0);
        let a = attitude_allocation(&thrust_force(phi, theta, fz), phi, theta)?;
        round_trip = round_trip
            .max((a.total_thrust - fz).abs())
            .max((a.phi_ref - phi).abs())
            .max((a.theta_ref - theta).abs());

        let q = Vec6::new(0.0, 0.0, 5.0, phi, theta, rng.random_range(-3.0..3.0));
        let qd = Vec6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let state = GeneralizedState::new(q, qd);
        let dynamics = ReducedAttitudeDynamics::new(&Partition::new(&plant, &state), &state)?;
        let u_bar = Vec3::from_fn(|_, _| rng.random_range(-300.0..300.0));
        let alloc = thrust_allocation(&u_bar, fz, &dynamics.b_bar)?;
        violation = violation.max(alloc.constraint_violation);
        residual = residual.max(alloc.residual);
    }
    Ok(AllocReport {
        samples,
        max_round_trip_error: round_trip,
        max_constraint_violation: violation,
        max_residual: residual,
        passed: round_trip <= 1e-9 && violation <= 1e-12 && residual <= 1e-9,
    })
}
