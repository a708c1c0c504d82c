//! Random plants and states shared by the dynamics checks.

#![allow(dead_code)]

use nalgebra::{SMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use octolift::kinematics::{angular_jacobian, linear_jacobian, rotation_zyx, EulerAngles, GeneralizedState, Mat3, Vec6};
use octolift::multibody::{LoadParams, Plant, VehicleParams};

pub type Mat6 = SMatrix<f64, 6, 6>;

pub const SAMPLES: usize = 1000;

pub fn random_case(rng: &mut ChaCha20Rng) -> (Plant, GeneralizedState) {
    let load = LoadParams::new(rng.random_range(0.0..200.0), rng.random_range(0.0..1.0));
    let q = Vec6::new(
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(0.0..20.0),
        rng.random_range(-1.2..1.2),
        rng.random_range(-1.2..1.2),
        rng.random_range(-3.1..3.1),
    );
    let qdot = Vec6::from_fn(|_, _| rng.random_range(-2.0..2.0));
    (
        Plant::new(VehicleParams::default(), load),
        GeneralizedState::new(q, qdot),
    )
}

pub fn cases() -> impl Iterator<Item = (Plant, GeneralizedState)> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    (0..SAMPLES).map(move |_| random_case(&mut rng))
}

/// Mass matrix summed body by body from point-mass and rotational Jacobians.
pub fn assembled_mass_matrix(plant: &Plant, eta: &EulerAngles) -> Mat6 {
    let r = rotation_zyx(eta);
    let jw = angular_jacobian(eta);
    let body = |mass: f64, com: &Vector3<f64>, inertia: &Mat3| {
        let jv = linear_jacobian(eta, com);
        jv.transpose() * jv * mass + jw.transpose() * r * inertia * r.transpose() * jw
    };
    let veh = &plant.vehicle;
    body(veh.mass, &veh.com(), &veh.inertia_matrix())
        + body(plant.load.mass, &plant.load.com(veh), &plant.load.inertia())
}

pub fn mass_matrix_rate_fd(plant: &Plant, s: &GeneralizedState) -> Mat6 {
    let h = 1e-6;
    let at = |sign: f64| {
        let q = s.q + s.qdot * (sign * h);
        plant.mass_matrix(&EulerAngles::new(q[3], q[4], q[5]))
    };
    (at(1.0) - at(-1.0)) / (2.0 * h)
}

