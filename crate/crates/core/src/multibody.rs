//! Euler-Lagrange model of the octocopter with a rigidly attached cubic load.
//!
//! `M(q) qdd + C(q, qd) qd + g(q) = B(q) tau + zeta`, with `q = (xi, eta)`.
//! The inertia matrix depends on the attitude only, so every `q`-derivative
//! below is taken with respect to `(phi, theta, psi)`.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    angular_jacobian, euler_rate_matrix, euler_rate_partials, linear_jacobian, rotation_partials,
    rotation_zyx, skew, EulerAngles, GeneralizedState, Mat3, Vec3, Vec6,
};

pub const NUM_PROPS: usize = 8;

pub type Mat6x8 = SMatrix<f64, 6, NUM_PROPS>;
pub type Thrusts = SVector<f64, NUM_PROPS>;

/// Physical constants of the bare vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Body-frame inertia tensor about the vehicle COM, row-major (kg m^2).
    pub inertia: [[f64; 3]; 3],
    /// Vehicle COM in the body frame (m).
    pub com_offset: [f64; 3],
    /// Propeller hub positions in the body frame (m).
    pub prop_positions: [[f64; 3]; NUM_PROPS],
    /// +1 counter-clockwise, -1 clockwise (top view).
    pub spin: [i8; NUM_PROPS],
    /// Thrust constant (N s^2).
    pub thrust_coeff: f64,
    /// Drag-torque constant (N m s^2).
    pub drag_coeff: f64,
    /// Signed gravitational acceleration; negative with z pointing up.
    pub gravity: f64,
    /// Distance from the body origin to the load attachment point (m).
    pub attach_offset: f64,
    /// -1 for a load hanging below the vehicle, +1 above.
    pub attach_side: i8,
}

impl Default for VehicleParams {
    fn default() -> Self {
        let arm = 1.1;
        let (upper, lower) = (0.12, -0.17);
        let corners = [(arm, arm), (-arm, arm), (-arm, -arm), (arm, -arm)];
        let mut prop_positions = [[0.0; 3]; NUM_PROPS];
        for (k, &(x, y)) in corners.iter().enumerate() {
            prop_positions[2 * k] = [x, y, upper];
            prop_positions[2 * k + 1] = [x, y, lower];
        }
        Self {
            mass: 53.09,
            inertia: [[18.78, 0.0, 0.0], [0.0, 19.76, 0.0], [0.0, 0.0, 37.87]],
            com_offset: [0.0; 3],
            prop_positions,
            spin: [1, -1, 1, -1, 1, -1, 1, -1],
            thrust_coeff: 2.85e-5,
            drag_coeff: 1.42e-6,
            gravity: -9.81,
            attach_offset: 0.2,
            attach_side: -1,
        }
    }
}

impl VehicleParams {
    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::from_fn(|r, c| self.inertia[r][c])
    }

    pub fn com(&self) -> Vec3 {
        Vec3::from(self.com_offset)
    }

    pub fn prop_position(&self, p: usize) -> Vec3 {
        Vec3::from(self.prop_positions[p])
    }

    /// Torque-to-thrust ratio `k_tau / b` (m).
    pub fn torque_ratio(&self) -> f64 {
        self.drag_coeff / self.thrust_coeff
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::invalid("vehicle.mass", "must be > 0"));
        }
        let i = self.inertia_matrix();
        if (i - i.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("vehicle.inertia", "must be symmetric"));
        }
        if i.cholesky().is_none() {
            return Err(Error::invalid("vehicle.inertia", "must be positive definite"));
        }
        if !(self.thrust_coeff > 0.0) {
            return Err(Error::invalid("vehicle.thrust_coeff", "must be > 0"));
        }
        if !(self.drag_coeff > 0.0) {
            return Err(Error::invalid("vehicle.drag_coeff", "must be > 0"));
        }
        if self.spin.iter().any(|s| s.abs() != 1) {
            return Err(Error::invalid("vehicle.spin", "entries must be +1 or -1"));
        }
        if self.attach_side.abs() != 1 {
            return Err(Error::invalid("vehicle.attach_side", "must be +1 or -1"));
        }
        if !(self.attach_offset >= 0.0) {
            return Err(Error::invalid("vehicle.attach_offset", "must be >= 0"));
        }
        let finite = self.gravity.is_finite()
            && self.com_offset.iter().all(|v| v.is_finite())
            && self.prop_positions.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("vehicle", "non-finite entry"));
        }
        Ok(())
    }
}

/// Cubic load of edge `2 * half_edge` and homogeneous density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadParams {
    /// kg
    pub mass: f64,
    /// m
    pub half_edge: f64,
}

impl Default for LoadParams {
    fn default() -> Self {
        Self {
            mass: 100.0,
            half_edge: 0.5,
        }
    }
}

impl LoadParams {
    pub fn new(mass: f64, half_edge: f64) -> Self {
        Self { mass, half_edge }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Negative entries are clamped to zero.
    pub fn projected(self) -> Self {
        Self::new(self.mass.max(0.0), self.half_edge.max(0.0))
    }

    pub fn inertia(&self) -> Mat3 {
        Mat3::identity() * (self.mass / 6.0 * self.half_edge * self.half_edge)
    }

    /// Load COM in the body frame, `(0, 0, side * (offset + half_edge))`.
    pub fn com(&self, veh: &VehicleParams) -> Vec3 {
        Vec3::new(
            0.0,
            0.0,
            f64::from(veh.attach_side) * (veh.attach_offset + self.half_edge),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0) || !self.mass.is_finite() {
            return Err(Error::invalid("load.mass", "must be finite and >= 0"));
        }
        if !(self.half_edge >= 0.0) || !self.half_edge.is_finite() {
            return Err(Error::invalid("load.half_edge", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Propeller thrust `b w^2`.
pub fn propeller_thrust(omega: f64, veh: &VehicleParams) -> f64 {
    veh.thrust_coeff * omega * omega
}

/// Reaction torque `lambda_p k_tau w^2` of propeller `p`.
pub fn propeller_torque(omega: f64, p: usize, veh: &VehicleParams) -> f64 {
    f64::from(veh.spin[p]) * veh.drag_coeff * omega * omega
}

/// Lumped inertial quantities of vehicle + load that the matrices depend on.
#[derive(Debug, Clone, Copy)]
struct Lumped {
    total_mass: f64,
    /// `S(sum m_i r_i)`
    moment_skew: Mat3,
    /// `sum m_i r_i`
    first_moment: Vec3,
    /// `I_O + I_L - sum m_i S(r_i)^2`, body frame about the body origin.
    body_inertia: Mat3,
}

impl Lumped {
    fn new(veh: &VehicleParams, load: &LoadParams) -> Self {
        let (r_o, r_l) = (veh.com(), load.com(veh));
        let (s_o, s_l) = (skew(&r_o), skew(&r_l));
        let first_moment = r_o * veh.mass + r_l * load.mass;
        Self {
            total_mass: veh.mass + load.mass,
            moment_skew: skew(&first_moment),
            first_moment,
            body_inertia: veh.inertia_matrix() + load.inertia()
                - s_o * s_o * veh.mass
                - s_l * s_l * load.mass,
        }
    }
}

fn assemble(m11: f64, m12: &Mat3, m22: &Mat3) -> SMatrix<f64, 6, 6> {
    let mut m = SMatrix::<f64, 6, 6>::zeros();
    m.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Mat3::identity() * m11));
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(m12);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&m12.transpose());
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(m22);
    m
}

/// Vehicle + load model evaluated at given parameters.
#[derive(Debug, Clone)]
pub struct Plant {
    pub vehicle: VehicleParams,
    pub load: LoadParams,
    lumped: Lumped,
}

impl Plant {
    pub fn new(vehicle: VehicleParams, load: LoadParams) -> Self {
        let lumped = Lumped::new(&vehicle, &load);
        Self {
            vehicle,
            load,
            lumped,
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.lumped.total_mass
    }

    pub fn mass_matrix(&self, eta: &EulerAngles) -> SMatrix<f64, 6, 6> {
        let r = rotation_zyx(eta);
        let w = euler_rate_matrix(eta);
        let m12 = -r * self.lumped.moment_skew * w;
        let m22 = w.transpose() * self.lumped.body_inertia * w;
        assemble(self.lumped.total_mass, &m12, &m22)
    }

    /// `dM/dq_i` for i = 3, 4, 5 (the translational partials vanish).
    pub fn mass_matrix_partials(&self, eta: &EulerAngles) -> [SMatrix<f64, 6, 6>; 3] {
        let r = rotation_zyx(eta);
        let w = euler_rate_matrix(eta);
        let dr = rotation_partials(eta);
        let dw = euler_rate_partials(eta);
        let (s, j) = (self.lumped.moment_skew, self.lumped.body_inertia);
        std::array::from_fn(|k| {
            let d12 = -(dr[k] * s * w + r * s * dw[k]);
            let d22 = dw[k].transpose() * j * w + w.transpose() * j * dw[k];
            assemble(0.0, &d12, &d22)
        })
    }

    /// Christoffel-symbol Coriolis matrix.
    pub fn coriolis_matrix(&self, state: &GeneralizedState) -> SMatrix<f64, 6, 6> {
        let dm = self.mass_matrix_partials(&state.attitude());
        let qd = &state.qdot;
        let mut c = SMatrix::<f64, 6, 6>::zeros();
        for (k, dmk) in dm.iter().enumerate() {
            let i = k + 3;
            let dmq = dmk * qd;
            // sum_i dM/dq_i qd_i
            c += dmk * qd[i];
            // column i: dM/dq_i qd
            let mut col = c.column_mut(i);
            col += dmq;
            // row i: -(dM/dq_i qd)^T
            let mut row = c.row_mut(i);
            row -= dmq.transpose();
        }
        c * 0.5
    }

    pub fn potential_energy(&self, q: &Vec6) -> f64 {
        let eta = EulerAngles::new(q[3], q[4], q[5]);
        let g_r = Vec3::new(0.0, 0.0, self.vehicle.gravity);
        let xi = q.fixed_rows::<3>(0).into_owned();
        -g_r.dot(&(xi * self.lumped.total_mass + rotation_zyx(&eta) * self.lumped.first_moment))
    }

    pub fn kinetic_energy(&self, state: &GeneralizedState) -> f64 {
        0.5 * state.qdot.dot(&(self.mass_matrix(&state.attitude()) * state.qdot))
    }

    /// `dP/dq`.
    pub fn gravity_vector(&self, eta: &EulerAngles) -> Vec6 {
        let g_r = Vec3::new(0.0, 0.0, self.vehicle.gravity);
        let dr = rotation_partials(eta);
        let mut g = Vec6::zeros();
        g.fixed_rows_mut::<3>(0)
            .copy_from(&(-g_r * self.lumped.total_mass));
        for k in 0..3 {
            g[3 + k] = -g_r.dot(&(dr[k] * self.lumped.first_moment));
        }
        g
    }

    /// Generalized input matrix; column `p` is `(J_p^T + W_p^T lambda_p k_b) R a_z`.
    pub fn input_matrix(&self, eta: &EulerAngles) -> Mat6x8 {
        let r = rotation_zyx(eta);
        let thrust_dir = r * Vec3::z();
        let w_p = angular_jacobian(eta);
        let k_b = self.vehicle.torque_ratio();
        let mut b = Mat6x8::zeros();
        for p in 0..NUM_PROPS {
            let j_p = linear_jacobian(eta, &self.vehicle.prop_position(p));
            let lam = f64::from(self.vehicle.spin[p]);
            let col = (j_p.transpose() + w_p.transpose() * (lam * k_b)) * thrust_dir;
            b.set_column(p, &col);
        }
        b
    }

    /// `qdd = M^-1 (B tau + zeta - C qd - g)`.
    pub fn forward_dynamics(
        &self,
        state: &GeneralizedState,
        tau: &Thrusts,
        zeta: &Vec6,
    ) -> Result<Vec6> {
        let eta = state.attitude();
        let rhs = self.input_matrix(&eta) * tau + zeta
            - self.coriolis_matrix(state) * state.qdot
            - self.gravity_vector(&eta);
        self.mass_matrix(&eta)
            .cholesky()
            .map(|ch| ch.solve(&rhs))
            .ok_or(Error::LinearSolveFailure("mass matrix not positive definite"))
    }
}

pub fn mass_matrix(
    state: &GeneralizedState,
    veh: &VehicleParams,
    load: &LoadParams,
) -> SMatrix<f64, 6, 6> {
    Plant::new(veh.clone(), *load).mass_matrix(&state.attitude())
}

pub fn coriolis_matrix(
    state: &GeneralizedState,
    veh: &VehicleParams,
    load: &LoadParams,
) -> SMatrix<f64, 6, 6> {
    Plant::new(veh.clone(), *load).coriolis_matrix(state)
}

pub fn gravity_vector(state: &GeneralizedState, veh: &VehicleParams, load: &LoadParams) -> Vec6 {
    Plant::new(veh.clone(), *load).gravity_vector(&state.attitude())
}

pub fn input_matrix(state: &GeneralizedState, veh: &VehicleParams) -> Mat6x8 {
    Plant::new(veh.clone(), LoadParams::none()).input_matrix(&state.attitude())
}

/// Generalized forces acting on the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeneralizedForces {
    pub tau: Thrusts,
    pub zeta: Vec6,
}

pub fn forward_dynamics(
    state: &GeneralizedState,
    forces: &GeneralizedForces,
    veh: &VehicleParams,
    load: &LoadParams,
) -> Result<Vec6> {
    Plant::new(veh.clone(), *load).forward_dynamics(state, &forces.tau, &forces.zeta)
}
