//! ZYX Euler-angle kinematics: rotation matrix, Euler-rate matrix and the
//! point/angular velocity Jacobians of a body-fixed point.
//!
//! Generalized coordinates are `q = (x, y, z, phi, theta, psi)`; the attitude
//! part is kept unwrapped.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = SVector<f64, 6>;
pub type Mat6 = SMatrix<f64, 6, 6>;
pub type Mat3x6 = SMatrix<f64, 3, 6>;

/// Smallest admissible `|cos(theta)|` for operations that divide by it.
pub const COS_THETA_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }

    pub fn from_vec(v: &Vec3) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_vec(self) -> Vec3 {
        Vec3::new(self.phi, self.theta, self.psi)
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.theta.is_finite() && self.psi.is_finite()
    }

    /// Fails when the Euler matrix is (numerically) singular.
    pub fn check_regular(&self) -> Result<()> {
        let c = self.theta.cos();
        if c.abs() < COS_THETA_LIMIT {
            return Err(Error::Singularity {
                cos_theta: c,
                limit: COS_THETA_LIMIT,
            });
        }
        Ok(())
    }
}

/// Position/attitude and their rates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedState {
    pub q: Vec6,
    pub qdot: Vec6,
}

impl GeneralizedState {
    pub fn new(q: Vec6, qdot: Vec6) -> Self {
        Self { q, qdot }
    }

    pub fn at_rest(q: Vec6) -> Self {
        Self::new(q, Vec6::zeros())
    }

    pub fn position(&self) -> Vec3 {
        self.q.fixed_rows::<3>(0).into_owned()
    }

    pub fn attitude(&self) -> EulerAngles {
        EulerAngles::new(self.q[3], self.q[4], self.q[5])
    }

    pub fn velocity(&self) -> Vec3 {
        self.qdot.fixed_rows::<3>(0).into_owned()
    }

    pub fn attitude_rate(&self) -> Vec3 {
        self.qdot.fixed_rows::<3>(3).into_owned()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
    }

    /// Stacks `(q, qdot)` into the 12-vector used by the estimator.
    pub fn to_stacked(&self) -> SVector<f64, 12> {
        let mut x = SVector::<f64, 12>::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.q);
        x.fixed_rows_mut::<6>(6).copy_from(&self.qdot);
        x
    }

    pub fn from_stacked(x: &SVector<f64, 12>) -> Self {
        Self::new(
            x.fixed_rows::<6>(0).into_owned(),
            x.fixed_rows::<6>(6).into_owned(),
        )
    }
}

/// `S(v)` with `S(v) w = v x w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Body-to-inertial rotation `R = Rz(psi) Ry(theta) Rx(phi)`.
pub fn rotation_zyx(eta: &EulerAngles) -> Mat3 {
    rot_z(eta.psi) * rot_y(eta.theta) * rot_x(eta.phi)
}

/// Partial derivatives of [`rotation_zyx`] with respect to `(phi, theta, psi)`.
pub fn rotation_partials(eta: &EulerAngles) -> [Mat3; 3] {
    let (rx, ry, rz) = (rot_x(eta.phi), rot_y(eta.theta), rot_z(eta.psi));
    [
        rz * ry * rx * skew(&Vec3::x()),
        rz * ry * skew(&Vec3::y()) * rx,
        skew(&Vec3::z()) * rz * ry * rx,
    ]
}

/// Euler matrix `W` mapping Euler-angle rates to body angular velocity.
pub fn euler_rate_matrix(eta: &EulerAngles) -> Mat3 {
    let (sp, cp) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    Mat3::new(1.0, 0.0, -st, 0.0, cp, ct * sp, 0.0, -sp, cp * ct)
}

/// Partial derivatives of [`euler_rate_matrix`]; the yaw partial is zero.
pub fn euler_rate_partials(eta: &EulerAngles) -> [Mat3; 3] {
    let (sp, cp) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    [
        Mat3::new(0.0, 0.0, 0.0, 0.0, -sp, ct * cp, 0.0, -cp, -sp * ct),
        Mat3::new(0.0, 0.0, -ct, 0.0, 0.0, -st * sp, 0.0, 0.0, -cp * st),
        Mat3::zeros(),
    ]
}

/// Inverse of the Euler matrix; errors near `cos(theta) = 0`.
pub fn euler_rate_inverse(eta: &EulerAngles) -> Result<Mat3> {
    eta.check_regular()?;
    let (sp, cp) = eta.phi.sin_cos();
    let (st, ct) = eta.theta.sin_cos();
    Ok(Mat3::new(
        1.0,
        sp * st / ct,
        cp * st / ct,
        0.0,
        cp,
        -sp,
        0.0,
        sp / ct,
        cp / ct,
    ))
}

/// Linear velocity Jacobian `[I | -R S(r) W]` of the body-fixed point `r_body`.
pub fn linear_jacobian(eta: &EulerAngles, r_body: &Vec3) -> Mat3x6 {
    let mut j = Mat3x6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Mat3::identity());
    let rot = -rotation_zyx(eta) * skew(r_body) * euler_rate_matrix(eta);
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&rot);
    j
}

/// Angular velocity Jacobian `[0 | R W]` (inertial angular velocity).
pub fn angular_jacobian(eta: &EulerAngles) -> Mat3x6 {
    let mut w = Mat3x6::zeros();
    w.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(rotation_zyx(eta) * euler_rate_matrix(eta)));
    w
}

/// Body angular velocity `W(eta) eta_dot`.
pub fn body_rate(eta: &EulerAngles, eta_dot: &Vec3) -> Vec3 {
    euler_rate_matrix(eta) * eta_dot
}
