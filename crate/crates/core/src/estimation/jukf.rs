//! Joint estimation of the generalized state, the horizontal exogenous forces
//! and the load parameters `(m_L, r_L)` over the 16-dimensional augmented
//! state `mu = (q, qdot, d, p)`.

use nalgebra::{SMatrix, SVector, Vector2};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::estimation::ukf::{self, Belief, Innovation};
use crate::kinematics::{body_rate, GeneralizedState, Vec6};
use crate::multibody::{LoadParams, Plant, Thrusts, VehicleParams};

pub const STATE_DIM: usize = 12;
pub const AUG_DIM: usize = 16;
pub const MEAS_DIM: usize = 9;

pub type AugVec = SVector<f64, AUG_DIM>;
pub type AugMat = SMatrix<f64, AUG_DIM, AUG_DIM>;
pub type MeasVec = SVector<f64, MEAS_DIM>;
pub type MeasMat = SMatrix<f64, MEAS_DIM, MEAS_DIM>;
pub type GaussianBelief = Belief<AUG_DIM>;

/// Filter noise and initial-belief blocks, all given as diagonal variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Process noise on `(x, d, p)`.
    pub process_variance: [f64; AUG_DIM],
    /// Measurement noise on `(xi, eta, omega)`.
    pub measurement_variance: [f64; MEAS_DIM],
    pub initial_state: [f64; STATE_DIM],
    pub initial_state_variance: [f64; STATE_DIM],
    pub initial_disturbance: [f64; 2],
    pub initial_disturbance_variance: [f64; 2],
    pub initial_parameters: [f64; 2],
    pub initial_parameter_variance: [f64; 2],
}

fn sq(v: f64) -> f64 {
    v * v
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let mut process_variance = [sq(0.01 / 3.0); AUG_DIM];
        process_variance[12] = sq(1.0 / 3.0);
        process_variance[13] = sq(1.0 / 3.0);
        process_variance[14] = sq(2.0 / 3.0);
        process_variance[15] = sq(0.001 / 3.0);

        let ang = sq(0.05 * PI / 180.0);
        let gyro = sq(0.00552);
        let measurement_variance = [sq(0.05), sq(0.05), sq(0.17), ang, ang, ang, gyro, gyro, gyro];

        let pos = sq(2.0 / 3.0);
        let tilt = sq(PI / 18.0);
        let rate = sq(PI / 36.0);
        // the linear-velocity block is printed unsquared
        let vel = 1.0 / 3.0;
        Self {
            process_variance,
            measurement_variance,
            initial_state: [2.4, 0.5, -0.2, PI / 6.0, PI / 6.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            initial_state_variance: [
                pos,
                pos,
                pos,
                tilt,
                tilt,
                sq(PI / 6.0),
                vel,
                vel,
                vel,
                rate,
                rate,
                rate,
            ],
            initial_disturbance: [0.0, 0.0],
            initial_disturbance_variance: [sq(1.0 / 3.0); 2],
            initial_parameters: [50.0, 0.75],
            initial_parameter_variance: [sq(50.0 / 3.0), sq(0.75 / 3.0)],
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |field: &str, vals: &[f64]| {
            if vals.iter().all(|v| v.is_finite() && *v >= 0.0) {
                Ok(())
            } else {
                Err(Error::invalid(field, "variances must be finite and >= 0"))
            }
        };
        nonneg("jukf.process_variance", &self.process_variance)?;
        nonneg("jukf.initial_state_variance", &self.initial_state_variance)?;
        nonneg("jukf.initial_disturbance_variance", &self.initial_disturbance_variance)?;
        nonneg("jukf.initial_parameter_variance", &self.initial_parameter_variance)?;
        if !self.measurement_variance.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::invalid(
                "jukf.measurement_variance",
                "variances must be finite and > 0",
            ));
        }
        let means = self
            .initial_state
            .iter()
            .chain(&self.initial_disturbance)
            .chain(&self.initial_parameters);
        if !means.into_iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("jukf.initial_state", "means must be finite"));
        }
        Ok(())
    }

    pub fn process_cov(&self) -> AugMat {
        AugMat::from_diagonal(&AugVec::from(self.process_variance))
    }

    pub fn measurement_cov(&self) -> MeasMat {
        MeasMat::from_diagonal(&MeasVec::from(self.measurement_variance))
    }

    pub fn initial_belief(&self) -> GaussianBelief {
        let mean = AugmentedState {
            x: GeneralizedState::from_stacked(&SVector::from(self.initial_state)),
            d: Vector2::from(self.initial_disturbance),
            p: LoadParams::new(self.initial_parameters[0], self.initial_parameters[1]),
        };
        let mut var = AugVec::zeros();
        var.fixed_rows_mut::<STATE_DIM>(0)
            .copy_from_slice(&self.initial_state_variance);
        var.fixed_rows_mut::<2>(12)
            .copy_from_slice(&self.initial_disturbance_variance);
        var.fixed_rows_mut::<2>(14)
            .copy_from_slice(&self.initial_parameter_variance);
        Belief::new(mean.to_vec(), AugMat::from_diagonal(&var))
    }
}

/// `(x, d, p)` view of an augmented vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedState {
    pub x: GeneralizedState,
    pub d: Vector2<f64>,
    pub p: LoadParams,
}

impl AugmentedState {
    pub fn from_vec(mu: &AugVec) -> Self {
        Self {
            x: GeneralizedState::from_stacked(&mu.fixed_rows::<STATE_DIM>(0).into_owned()),
            d: mu.fixed_rows::<2>(12).into_owned(),
            p: LoadParams::new(mu[14], mu[15]),
        }
    }

    pub fn to_vec(&self) -> AugVec {
        let mut mu = AugVec::zeros();
        mu.fixed_rows_mut::<STATE_DIM>(0)
            .copy_from(&self.x.to_stacked());
        mu.fixed_rows_mut::<2>(12).copy_from(&self.d);
        mu[14] = self.p.mass;
        mu[15] = self.p.half_edge;
        mu
    }
}

/// Forward-Euler step of the augmented model. Negative load parameters are
/// clamped to zero for the dynamics only; `d` and `p` are carried unchanged.
pub fn process_model(vehicle: &VehicleParams, ts: f64, mu: &AugVec, u: &Thrusts) -> Result<AugVec> {
    let aug = AugmentedState::from_vec(mu);
    let plant = Plant::new(vehicle.clone(), aug.p.projected());
    let mut zeta = Vec6::zeros();
    zeta[0] = aug.d[0];
    zeta[1] = aug.d[1];
    let qdd = plant.forward_dynamics(&aug.x, u, &zeta)?;
    let mut next = *mu;
    for i in 0..6 {
        next[i] += ts * aug.x.qdot[i];
        next[6 + i] += ts * qdd[i];
    }
    Ok(next)
}

/// `(xi, eta, W_eta(eta) eta_dot)`.
pub fn measurement_model(mu: &AugVec) -> MeasVec {
    let x = GeneralizedState::from_stacked(&mu.fixed_rows::<STATE_DIM>(0).into_owned());
    let mut y = MeasVec::zeros();
    y.fixed_rows_mut::<3>(0).copy_from(&x.position());
    y.fixed_rows_mut::<3>(3).copy_from(&x.attitude().to_vec());
    y.fixed_rows_mut::<3>(6)
        .copy_from(&body_rate(&x.attitude(), &x.attitude_rate()));
    y
}

/// Running filter for the octocopter with attached load.
#[derive(Debug, Clone)]
pub struct Jukf {
    vehicle: VehicleParams,
    ts: f64,
    process_cov: AugMat,
    measurement_cov: MeasMat,
    belief: GaussianBelief,
    jitter_retries: usize,
    last_innovation: Option<Innovation<MEAS_DIM>>,
}

impl Jukf {
    pub fn new(vehicle: VehicleParams, noise: &NoiseConfig, ts: f64) -> Result<Self> {
        noise.validate()?;
        if !(ts.is_finite() && ts >= 0.0) {
            return Err(Error::invalid("run.sample_time", "must be finite and >= 0"));
        }
        Ok(Self {
            vehicle,
            ts,
            process_cov: noise.process_cov(),
            measurement_cov: noise.measurement_cov(),
            belief: noise.initial_belief(),
            jitter_retries: 0,
            last_innovation: None,
        })
    }

    pub fn belief(&self) -> &GaussianBelief {
        &self.belief
    }

    pub fn set_belief(&mut self, belief: GaussianBelief) {
        self.belief = belief;
    }

    pub fn estimate(&self) -> AugmentedState {
        AugmentedState::from_vec(&self.belief.mean)
    }

    /// Number of Cholesky factorizations that needed the jitter retry.
    pub fn jitter_retries(&self) -> usize {
        self.jitter_retries
    }

    pub fn last_innovation(&self) -> Option<&Innovation<MEAS_DIM>> {
        self.last_innovation.as_ref()
    }

    fn note_jitter(&mut self) -> Result<()> {
        if ukf::cholesky_lower(&self.belief.cov)?.1 {
            self.jitter_retries += 1;
            log::debug!("covariance needed jitter before factorization");
        }
        Ok(())
    }

    pub fn predict(&mut self, u: &Thrusts) -> Result<()> {
        self.note_jitter()?;
        let (veh, ts) = (&self.vehicle, self.ts);
        self.belief = ukf::predict(&self.belief, |mu| process_model(veh, ts, mu, u), &self.process_cov)?;
        Ok(())
    }

    pub fn update(&mut self, y: &MeasVec) -> Result<()> {
        self.note_jitter()?;
        let (belief, innovation) = ukf::update(&self.belief, y, measurement_model, &self.measurement_cov)?;
        self.belief = belief;
        self.last_innovation = Some(innovation);
        Ok(())
    }

    /// Predicts with the previous input when one exists, then conditions on
    /// `y`.
    pub fn step(&mut self, u_prev: Option<&Thrusts>, y: &MeasVec) -> Result<AugmentedState> {
        if let Some(u) = u_prev {
            self.predict(u)?;
        }
        self.update(y)?;
        Ok(self.estimate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{angular_jacobian, rotation_zyx, EulerAngles};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn truth(q: Vec6, qd: Vec6) -> AugVec {
        AugmentedState {
            x: GeneralizedState::new(q, qd),
            d: Vector2::zeros(),
            p: LoadParams::new(100.0, 0.5),
        }
        .to_vec()
    }

    fn hover_thrust() -> Thrusts {
        Thrusts::repeat(153.09 * 9.81 / 8.0)
    }

    #[test]
    fn default_noise_blocks() {
        let n = NoiseConfig::default();
        n.validate().unwrap();
        assert_eq!(n.process_variance[0], (0.01f64 / 3.0).powi(2));
        assert_eq!(n.process_variance[14], (2.0f64 / 3.0).powi(2));
        assert_eq!(n.measurement_variance[2], 0.17 * 0.17);
        assert_eq!(n.initial_state_variance[6], 1.0 / 3.0);
        assert_eq!(n.initial_parameters, [50.0, 0.75]);
        let b = n.initial_belief();
        assert_eq!(b.mean[3], PI / 6.0);
        assert_eq!(b.mean[14], 50.0);
        assert_eq!(b.cov[(15, 15)], 0.0625);
    }

    #[test]
    fn hover_is_fixed_point() {
        let mu = truth(Vec6::new(1.0, 2.0, 5.0, 0.0, 0.0, 0.0), Vec6::zeros());
        let next = process_model(&VehicleParams::default(), 0.01, &mu, &hover_thrust()).unwrap();
        assert!((next - mu).amax() <= 1e-12);
    }

    #[test]
    fn zero_step_is_identity() {
        let mu = truth(
            Vec6::new(1.0, 2.0, 5.0, 0.1, -0.2, 0.3),
            Vec6::new(0.5, 0.1, -0.3, 0.2, 0.1, -0.1),
        );
        let next = process_model(&VehicleParams::default(), 0.0, &mu, &hover_thrust()).unwrap();
        assert_eq!(next, mu);
    }

    #[test]
    fn disturbance_injection_with_centered_load() {
        // point-mass load at the body origin: no translation/rotation coupling
        let veh = VehicleParams {
            attach_offset: 0.0,
            ..VehicleParams::default()
        };
        let mut mu0 = truth(Vec6::new(0.0, 0.0, 5.0, 0.1, 0.05, 0.2), Vec6::zeros());
        mu0[15] = 0.0;
        let mut mu1 = mu0;
        mu1[12] = 30.0;
        let a = process_model(&veh, 0.01, &mu0, &hover_thrust()).unwrap();
        let b = process_model(&veh, 0.01, &mu1, &hover_thrust()).unwrap();
        assert_relative_eq!(b[6] - a[6], 30.0 / 153.09 * 0.01, epsilon = 1e-12);
        assert_relative_eq!(b[7], a[7], epsilon = 1e-12);
        assert_eq!(b[12], 30.0);
    }

    #[test]
    fn disturbance_injection_with_offset_load() {
        let veh = VehicleParams::default();
        let q = Vec6::new(0.0, 0.0, 5.0, 0.1, 0.05, 0.2);
        let mu0 = truth(q, Vec6::zeros());
        let mut mu1 = mu0;
        mu1[12] = 30.0;
        let a = process_model(&veh, 0.01, &mu0, &hover_thrust()).unwrap();
        let b = process_model(&veh, 0.01, &mu1, &hover_thrust()).unwrap();
        let m = Plant::new(veh, LoadParams::new(100.0, 0.5)).mass_matrix(&EulerAngles::new(0.1, 0.05, 0.2));
        let expected = m.lu().solve(&(Vec6::x() * 30.0)).unwrap() * 0.01;
        let diff = (b - a).fixed_rows::<6>(6).into_owned();
        assert_relative_eq!(diff, expected, epsilon = 1e-12);
    }

    #[test]
    fn measurement_trivial_cases() {
        let mu = truth(Vec6::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0), Vec6::new(0.0, 0.0, 0.0, 0.1, 0.2, 0.3));
        let y = measurement_model(&mu);
        assert_eq!(y.fixed_rows::<3>(6).into_owned(), mu.fixed_rows::<3>(9).into_owned());
        let mu = truth(Vec6::new(1.0, 2.0, 3.0, 0.4, -0.3, 1.0), Vec6::zeros());
        assert_eq!(measurement_model(&mu).fixed_rows::<3>(6).into_owned(), crate::kinematics::Vec3::zeros());
    }

    #[test]
    fn noise_free_hover_rollout_stays_exact() {
        let veh = VehicleParams::default();
        let mu = truth(Vec6::new(0.0, 0.0, 5.0, 0.0, 0.0, 0.0), Vec6::zeros());
        let mut noise = NoiseConfig::default();
        noise.initial_state.copy_from_slice(mu.fixed_rows::<12>(0).as_slice());
        noise.initial_parameters = [100.0, 0.5];
        // tight prior and negligible process noise: no spread-induced bias
        noise.initial_state_variance = [1e-12; 12];
        noise.initial_disturbance_variance = [1e-12; 2];
        noise.initial_parameter_variance = [1e-12; 2];
        noise.process_variance = [1e-14; 16];
        let mut f = Jukf::new(veh, &noise, 0.01).unwrap();
        let y = measurement_model(&mu);
        f.update(&y).unwrap();
        for _ in 0..100 {
            f.step(Some(&hover_thrust()), &y).unwrap();
            let err = (f.belief().mean - mu).fixed_rows::<12>(0).amax();
            assert!(err < 1e-6, "error {err}");
        }
    }

    #[test]
    fn first_step_from_scenario_prior() {
        let mut f = Jukf::new(VehicleParams::default(), &NoiseConfig::default(), 0.01).unwrap();
        let y = measurement_model(&truth(Vec6::new(1.9, 0.0, 0.8, 0.0, 0.0, PI / 6.0), Vec6::zeros()));
        f.step(None, &y).unwrap();
        f.step(Some(&hover_thrust()), &y).unwrap();
        assert!(f.belief().is_finite());
        assert!(f.belief().cov.symmetric_eigenvalues().min() >= -1e-10);
    }

    proptest! {
        #[test]
        fn body_rate_matches_angular_jacobian(
            q in prop::array::uniform6(-1.2f64..1.2),
            qd in prop::array::uniform6(-2.0f64..2.0),
        ) {
            let mu = truth(Vec6::from(q), Vec6::from(qd));
            let y = measurement_model(&mu);
            let eta = EulerAngles::new(q[3], q[4], q[5]);
            // inertial-frame rate rotated into the body frame
            let omega = rotation_zyx(&eta).transpose() * (angular_jacobian(&eta) * Vec6::from(qd));
            prop_assert!((y.fixed_rows::<3>(6) - omega).amax() <= 1e-12);
        }
    }
}
