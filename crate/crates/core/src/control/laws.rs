//! Runtime W-infinity control laws for the controlled (position) and
//! regulated (attitude) DOF groups, and the thrust/attitude-reference
//! allocation that links them.

use nalgebra::{SMatrix, SVector};

use crate::control::care::Mat9;
use crate::error::{Error, Result};
use crate::kinematics::{GeneralizedState, Mat3, Vec3};
use crate::multibody::{Plant, NUM_PROPS};

pub type Chi = SVector<f64, 9>;
pub type Mat3x8 = SMatrix<f64, 3, NUM_PROPS>;

const COS_LIMIT: f64 = 1e-6;

/// Stacks `(integral of error, error, error rate)`.
pub fn tracking_state(integral: &Vec3, error: &Vec3, error_rate: &Vec3) -> Chi {
    let mut chi = Chi::zeros();
    chi.fixed_rows_mut::<3>(0).copy_from(integral);
    chi.fixed_rows_mut::<3>(3).copy_from(error);
    chi.fixed_rows_mut::<3>(6).copy_from(error_rate);
    chi
}

/// `Y3^-1 [0 0 I] Q chi`: the closed-loop error acceleration with opposite sign.
pub fn feedback_acceleration(q: &Mat9, y3_inv: &Vec3, chi: &Chi) -> Vec3 {
    let qchi = q * chi;
    y3_inv.component_mul(&qchi.fixed_rows::<3>(6).into_owned())
}

fn block(m: &SMatrix<f64, 6, 6>, r: usize, c: usize) -> Mat3 {
    m.fixed_view::<3, 3>(r, c).into_owned()
}

/// Partitioned model terms of the position/attitude split.
#[derive(Debug, Clone)]
pub struct Partition {
    pub m_cc: Mat3,
    pub m_cr: Mat3,
    pub m_rc: Mat3,
    pub m_rr: Mat3,
    pub c_cc: Mat3,
    pub c_cr: Mat3,
    pub c_rc: Mat3,
    pub c_rr: Mat3,
    pub g_c: Vec3,
    pub g_r: Vec3,
    pub b_c: Mat3x8,
    pub b_r: Mat3x8,
}

impl Partition {
    pub fn new(plant: &Plant, state: &GeneralizedState) -> Self {
        let eta = state.attitude();
        let m = plant.mass_matrix(&eta);
        let c = plant.coriolis_matrix(state);
        let g = plant.gravity_vector(&eta);
        let b = plant.input_matrix(&eta);
        Self {
            m_cc: block(&m, 0, 0),
            m_cr: block(&m, 0, 3),
            m_rc: block(&m, 3, 0),
            m_rr: block(&m, 3, 3),
            c_cc: block(&c, 0, 0),
            c_cr: block(&c, 0, 3),
            c_rc: block(&c, 3, 0),
            c_rr: block(&c, 3, 3),
            g_c: g.fixed_rows::<3>(0).into_owned(),
            g_r: g.fixed_rows::<3>(3).into_owned(),
            b_c: b.fixed_rows::<3>(0).into_owned(),
            b_r: b.fixed_rows::<3>(3).into_owned(),
        }
    }

    fn m_cc_inv(&self) -> Result<Mat3> {
        self.m_cc
            .try_inverse()
            .ok_or(Error::LinearSolveFailure("M_cc is singular"))
    }
}

/// Drift term of the position error dynamics,
/// `M_cc^-1 (-M_cr qdd_r - C_cc qd_c - C_cr qd_r - g_c) - qdd_ref`.
pub fn translational_drift(
    part: &Partition,
    state: &GeneralizedState,
    attitude_accel: &Vec3,
    accel_ref: &Vec3,
) -> Result<Vec3> {
    let inv = part.m_cc_inv()?;
    let rhs = -part.m_cr * attitude_accel
        - part.c_cc * state.velocity()
        - part.c_cr * state.attitude_rate()
        - part.g_c;
    Ok(inv * rhs - accel_ref)
}

/// Position controller: `u* = -M_cc (Y3^-1 [0 0 I] Q chi + h_c)`.
///
/// `attitude_accel` is the attitude acceleration assumed in the drift term.
pub fn translational_control(
    chi: &Chi,
    state: &GeneralizedState,
    accel_ref: &Vec3,
    attitude_accel: &Vec3,
    q: &Mat9,
    y3_inv: &Vec3,
    plant: &Plant,
) -> Result<Vec3> {
    let part = Partition::new(plant, state);
    let h = translational_drift(&part, state, attitude_accel, accel_ref)?;
    Ok(-part.m_cc * (feedback_acceleration(q, y3_inv, chi) + h))
}

/// Total thrust and roll/pitch references realizing the force `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeAllocation {
    pub total_thrust: f64,
    pub phi_ref: f64,
    pub theta_ref: f64,
}

/// `f_z = u3 / (cos phi cos theta)`, `phi_r = asin(-u2 / f_z)`,
/// `theta_r = asin(u1 / (cos phi_r f_z))`.
pub fn attitude_allocation(u: &Vec3, phi: f64, theta: f64) -> Result<AttitudeAllocation> {
    let (cp, ct) = (phi.cos(), theta.cos());
    if cp.abs() < COS_LIMIT || ct.abs() < COS_LIMIT {
        return Err(Error::AllocationDomain(format!(
            "attitude too close to singular (phi = {phi:.4}, theta = {theta:.4})"
        )));
    }
    let fz = u.z / (cp * ct);
    if !(fz > 0.0) {
        return Err(Error::AllocationDomain(format!("total thrust {fz:.3e} N is not positive")));
    }
    let s_phi = -u.y / fz;
    if s_phi.abs() > 1.0 {
        return Err(Error::AllocationDomain(format!("|u2 / f_z| = {:.4} > 1", s_phi.abs())));
    }
    let phi_ref = s_phi.asin();
    let c_phi_ref = phi_ref.cos();
    if c_phi_ref.abs() < COS_LIMIT {
        return Err(Error::AllocationDomain("roll reference at +-pi/2".into()));
    }
    let s_theta = u.x / (c_phi_ref * fz);
    if s_theta.abs() > 1.0 {
        return Err(Error::AllocationDomain(format!(
            "|u1 / (cos phi_r f_z)| = {:.4} > 1",
            s_theta.abs()
        )));
    }
    Ok(AttitudeAllocation {
        total_thrust: fz,
        phi_ref,
        theta_ref: s_theta.asin(),
    })
}

/// Thrust vector `R a_z f_z` at zero yaw; the forward map of [`attitude_allocation`].
pub fn thrust_force(phi: f64, theta: f64, fz: f64) -> Vec3 {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    Vec3::new(cp * st, -sp, cp * ct) * fz
}

/// Schur-complement attitude dynamics `Mb qdd_r + Cb qd_r + eb = Bb tau`.
#[derive(Debug, Clone)]
pub struct ReducedAttitudeDynamics {
    pub m_bar: Mat3,
    pub c_bar: Mat3,
    pub e_bar: Vec3,
    pub b_bar: Mat3x8,
}

impl ReducedAttitudeDynamics {
    pub fn new(part: &Partition, state: &GeneralizedState) -> Result<Self> {
        let k = part.m_rc * part.m_cc_inv()?;
        Ok(Self {
            m_bar: part.m_rr - k * part.m_cr,
            c_bar: part.c_rr - k * part.c_cr,
            e_bar: part.g_r - k * part.g_c + (part.c_rc - k * part.c_cc) * state.velocity(),
            b_bar: part.b_r - k * part.b_c,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RotationalCommand {
    /// Generalized attitude input `u_bar*`.
    pub u_bar: Vec3,
    pub dynamics: ReducedAttitudeDynamics,
}

/// Attitude controller:
/// `u_bar* = -Mb (Y3^-1 [0 0 I] Q x - Mb^-1 Cb e_dot - Mb^-1 d_bar)` with
/// `d_bar = Mb qdd_rr + Cb qd_rr + eb`.
pub fn rotational_control(
    x: &Chi,
    state: &GeneralizedState,
    rate_ref: &Vec3,
    accel_ref: &Vec3,
    q: &Mat9,
    y3_inv: &Vec3,
    plant: &Plant,
) -> Result<RotationalCommand> {
    let part = Partition::new(plant, state);
    let dynamics = ReducedAttitudeDynamics::new(&part, state)?;
    if dynamics.m_bar.cholesky().is_none() {
        return Err(Error::LinearSolveFailure("reduced attitude inertia is singular"));
    }
    let error_rate = x.fixed_rows::<3>(6).into_owned();
    let d_bar = dynamics.m_bar * accel_ref + dynamics.c_bar * rate_ref + dynamics.e_bar;
    let u_bar = -dynamics.m_bar * feedback_acceleration(q, y3_inv, x)
        + dynamics.c_bar * error_rate
        + d_bar;
    Ok(RotationalCommand { u_bar, dynamics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::care::{synthesize, WeightSet};
    use crate::kinematics::Vec6;
    use crate::multibody::{LoadParams, VehicleParams};
    use approx::assert_relative_eq;

    fn part_gx(p: &Plant, s: &GeneralizedState) -> f64 {
        Partition::new(p, s).g_c.x
    }

    fn plant() -> Plant {
        Plant::new(VehicleParams::default(), LoadParams::new(100.0, 0.5))
    }

    #[test]
    fn hover_requires_pure_weight_compensation() {
        let p = plant();
        let sol = synthesize(&WeightSet::translational()).unwrap();
        let w = WeightSet::translational();
        let s = GeneralizedState::at_rest(Vec6::new(2.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        let u = translational_control(
            &Chi::zeros(),
            &s,
            &Vec3::zeros(),
            &Vec3::zeros(),
            &sol.q,
            &w.y3_inverse(),
            &p,
        )
        .unwrap();
        assert_relative_eq!(u, Vec3::new(0.0, 0.0, 153.09 * 9.81), epsilon = 1e-9);
    }

    #[test]
    fn positive_x_error_pushes_toward_reference() {
        let p = plant();
        let w = WeightSet::translational();
        let sol = synthesize(&w).unwrap();
        let s = GeneralizedState::at_rest(Vec6::new(0.3, 0.0, 1.0, 0.0, 0.0, 0.0));
        let chi = tracking_state(&Vec3::zeros(), &Vec3::new(0.3, 0.0, 0.0), &Vec3::zeros());
        let u = translational_control(&chi, &s, &Vec3::zeros(), &Vec3::zeros(), &sol.q, &w.y3_inverse(), &p)
            .unwrap();
        assert!(u.x < 0.0);
        // one Euler step from rest under u: x moves back toward the reference
        let qdd_x = (u.x - part_gx(&p, &s)) / p.total_mass();
        let x_next = 0.3 + 0.01 * (0.01 * qdd_x);
        assert!(x_next < 0.3);
    }

    #[test]
    fn closed_loop_error_acceleration_matches_feedback() {
        let p = plant();
        let w = WeightSet::translational();
        let sol = synthesize(&w).unwrap();
        let s = GeneralizedState::new(
            Vec6::new(1.0, -0.5, 3.0, 0.05, -0.04, 0.2),
            Vec6::new(0.3, 0.1, -0.2, 0.1, -0.2, 0.05),
        );
        let chi = tracking_state(
            &Vec3::new(0.1, -0.2, 0.05),
            &Vec3::new(0.2, 0.1, -0.3),
            &Vec3::new(-0.1, 0.3, 0.2),
        );
        let acc_ref = Vec3::new(0.05, -0.02, 0.1);
        let att_acc = Vec3::new(0.4, -0.3, 0.2);
        let u = translational_control(&chi, &s, &acc_ref, &att_acc, &sol.q, &w.y3_inverse(), &p).unwrap();

        // first block row of the dynamics with B_c tau = u and the same attitude acceleration
        let part = Partition::new(&p, &s);
        let qdd_c = part.m_cc.try_inverse().unwrap()
            * (u - part.m_cr * att_acc - part.c_cc * s.velocity() - part.c_cr * s.attitude_rate() - part.g_c);
        let err_acc = qdd_c - acc_ref;
        assert_relative_eq!(err_acc, -feedback_acceleration(&sol.q, &w.y3_inverse(), &chi), epsilon = 1e-9);
    }

    #[test]
    fn level_hover_allocation() {
        let a = attitude_allocation(&Vec3::new(0.0, 0.0, 1500.0), 0.0, 0.0).unwrap();
        assert_eq!(a.total_thrust, 1500.0);
        assert_eq!(a.phi_ref, 0.0);
        assert_eq!(a.theta_ref, 0.0);
    }

    #[test]
    fn allocation_round_trip() {
        let (phi, theta, fz) = (0.1, -0.05, 1500.0);
        let u = thrust_force(phi, theta, fz);
        let a = attitude_allocation(&u, phi, theta).unwrap();
        assert_relative_eq!(a.total_thrust, fz, epsilon = 1e-9);
        assert_relative_eq!(a.phi_ref, phi, epsilon = 1e-9);
        assert_relative_eq!(a.theta_ref, theta, epsilon = 1e-9);
    }

    #[test]
    fn allocation_domain_errors() {
        assert!(matches!(
            attitude_allocation(&Vec3::new(0.0, 2000.0, 1000.0), 0.0, 0.0),
            Err(Error::AllocationDomain(_))
        ));
        assert!(attitude_allocation(&Vec3::new(0.0, 0.0, -10.0), 0.0, 0.0).is_err());
        assert!(attitude_allocation(&Vec3::new(0.0, 0.0, 10.0), std::f64::consts::FRAC_PI_2, 0.0).is_err());
    }

    #[test]
    fn symmetric_load_at_rest_needs_no_attitude_torque() {
        let p = plant();
        let w = WeightSet::rotational();
        let sol = synthesize(&w).unwrap();
        let s = GeneralizedState::at_rest(Vec6::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0));
        let cmd = rotational_control(&Chi::zeros(), &s, &Vec3::zeros(), &Vec3::zeros(), &sol.q, &w.y3_inverse(), &p)
            .unwrap();
        assert!(cmd.u_bar.norm() < 1e-12);
    }

    #[test]
    fn reduced_dynamics_degenerate_without_offsets() {
        let p = Plant::new(VehicleParams::default(), LoadParams::none());
        let s = GeneralizedState::new(Vec6::zeros(), Vec6::new(0.2, 0.1, 0.0, 0.3, -0.1, 0.2));
        let part = Partition::new(&p, &s);
        assert_eq!(part.m_rc, Mat3::zeros());
        let red = ReducedAttitudeDynamics::new(&part, &s).unwrap();
        assert_eq!(red.m_bar, part.m_rr);
        assert_eq!(red.c_bar, part.c_rr);
        assert_relative_eq!(red.e_bar, part.g_r + part.c_rc * s.velocity(), epsilon = 1e-15);
    }

    #[test]
    fn attitude_closed_loop_matches_feedback() {
        let p = plant();
        let w = WeightSet::rotational();
        let sol = synthesize(&w).unwrap();
        let s = GeneralizedState::new(
            Vec6::new(1.0, 2.0, 3.0, 0.08, -0.05, 0.3),
            Vec6::new(0.2, -0.1, 0.3, 0.2, 0.1, -0.1),
        );
        let rate_ref = Vec3::new(0.0, 0.0, 0.05);
        let acc_ref = Vec3::new(0.0, 0.0, 0.01);
        let reference = Vec3::new(0.02, -0.03, 0.1);
        let err = s.attitude().to_vec() - reference;
        let err_rate = s.attitude_rate() - rate_ref;
        let x = tracking_state(&Vec3::new(0.01, 0.0, -0.02), &err, &err_rate);
        let cmd = rotational_control(&x, &s, &rate_ref, &acc_ref, &sol.q, &w.y3_inverse(), &p).unwrap();

        // any tau with Bb tau = u_bar gives the commanded error acceleration
        let red = &cmd.dynamics;
        let qdd_r = red.m_bar.try_inverse().unwrap() * (cmd.u_bar - red.c_bar * s.attitude_rate() - red.e_bar);
        assert_relative_eq!(qdd_r - acc_ref, -feedback_acceleration(&sol.q, &w.y3_inverse(), &x), epsilon = 1e-9);
    }
}
