//! Position loop -> thrust/attitude-reference allocation -> attitude loop ->
//! propeller thrust allocation, executed once per sample.

use crate::control::allocation::{thrust_allocation, ThrustAllocation};
use crate::control::care::{synthesize, RiccatiSolution, WeightSet};
use crate::control::laws::{
    attitude_allocation, feedback_acceleration, rotational_control, tracking_state,
    translational_control, Chi,
};
use crate::error::{Error, Result};
use crate::kinematics::{GeneralizedState, Vec3};
use crate::multibody::{LoadParams, Plant, Thrusts, VehicleParams};

/// Reference for the position DOF plus the yaw reference, with analytic
/// derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub yaw_accel: f64,
}

/// Synthesized gain of one DOF group.
#[derive(Debug, Clone)]
pub struct GroupGain {
    pub weights: WeightSet,
    pub riccati: RiccatiSolution,
    y3_inv: Vec3,
}

impl GroupGain {
    pub fn synthesize(weights: WeightSet) -> Result<Self> {
        Ok(Self {
            riccati: synthesize(&weights)?,
            y3_inv: weights.y3_inverse(),
            weights,
        })
    }

    pub fn value(&self, chi: &Chi) -> f64 {
        self.riccati.value(chi)
    }

    fn feedback(&self, chi: &Chi) -> Vec3 {
        feedback_acceleration(&self.riccati.q, &self.y3_inv, chi)
    }
}

#[derive(Debug, Clone)]
pub struct CascadeOutput {
    pub tau: Thrusts,
    pub total_thrust: f64,
    pub phi_ref: f64,
    pub theta_ref: f64,
    /// Commanded translational generalized force.
    pub u_star: Vec3,
    /// Commanded attitude generalized force.
    pub u_bar: Vec3,
    pub chi_c: Chi,
    pub chi_r: Chi,
    /// `chi_c^T Q_c chi_c / 2`
    pub value_c: f64,
    /// `chi_r^T Q_r chi_r / 2`
    pub value_r: f64,
    pub allocation: ThrustAllocation,
    /// Attitude acceleration the attitude loop commands at this sample.
    pub attitude_accel: Vec3,
}

/// Runtime controller holding the two integral accumulators.
#[derive(Debug, Clone)]
pub struct CascadeController {
    translational: GroupGain,
    rotational: GroupGain,
    vehicle: VehicleParams,
    sample_time: f64,
    integral_c: Vec3,
    integral_r: Vec3,
}

impl CascadeController {
    pub fn new(
        vehicle: VehicleParams,
        translational: WeightSet,
        rotational: WeightSet,
        sample_time: f64,
    ) -> Result<Self> {
        translational.validate("controller.translational")?;
        rotational.validate("controller.rotational")?;
        Ok(Self {
            translational: GroupGain::synthesize(translational)?,
            rotational: GroupGain::synthesize(rotational)?,
            vehicle,
            sample_time,
            integral_c: Vec3::zeros(),
            integral_r: Vec3::zeros(),
        })
    }

    pub fn translational_gain(&self) -> &GroupGain {
        &self.translational
    }

    pub fn rotational_gain(&self) -> &GroupGain {
        &self.rotational
    }

    pub fn integrals(&self) -> (Vec3, Vec3) {
        (self.integral_c, self.integral_r)
    }

    /// Computes the command for the estimated state and load without
    /// touching the controller state.
    pub fn evaluate(
        &self,
        estimate: &GeneralizedState,
        load: &LoadParams,
        reference: &ReferenceSample,
    ) -> Result<CascadeOutput> {
        let plant = Plant::new(self.vehicle.clone(), load.projected());

        let err_c = estimate.position() - reference.position;
        let err_rate_c = estimate.velocity() - reference.velocity;
        let chi_c = tracking_state(&self.integral_c, &err_c, &err_rate_c);
        // the attitude is taken to follow its reference, whose roll/pitch
        // derivatives are zero
        let accel_ref = Vec3::new(0.0, 0.0, reference.yaw_accel);
        let u_star = translational_control(
            &chi_c,
            estimate,
            &reference.acceleration,
            &accel_ref,
            &self.translational.riccati.q,
            &self.translational.y3_inv,
            &plant,
        )
        .map_err(Error::in_stage("translational_control"))?;

        let eta = estimate.attitude();
        let alloc = attitude_allocation(&u_star, eta.phi, eta.theta)
            .map_err(Error::in_stage("attitude_allocation"))?;

        // roll/pitch references are held constant over the sample
        let att_ref = Vec3::new(alloc.phi_ref, alloc.theta_ref, reference.yaw);
        let rate_ref = Vec3::new(0.0, 0.0, reference.yaw_rate);
        let err_r = eta.to_vec() - att_ref;
        let err_rate_r = estimate.attitude_rate() - rate_ref;
        let chi_r = tracking_state(&self.integral_r, &err_r, &err_rate_r);
        let cmd = rotational_control(
            &chi_r,
            estimate,
            &rate_ref,
            &accel_ref,
            &self.rotational.riccati.q,
            &self.rotational.y3_inv,
            &plant,
        )
        .map_err(Error::in_stage("rotational_control"))?;

        let allocation = thrust_allocation(&cmd.u_bar, alloc.total_thrust, &cmd.dynamics.b_bar)
            .map_err(Error::in_stage("thrust_allocation"))?;
        if allocation.negative_thrusts > 0 {
            log::debug!(
                "{} propeller(s) commanded negative thrust",
                allocation.negative_thrusts
            );
        }

        Ok(CascadeOutput {
            tau: allocation.tau,
            total_thrust: alloc.total_thrust,
            phi_ref: alloc.phi_ref,
            theta_ref: alloc.theta_ref,
            u_star,
            u_bar: cmd.u_bar,
            value_c: self.translational.value(&chi_c),
            value_r: self.rotational.value(&chi_r),
            attitude_accel: accel_ref - self.rotational.feedback(&chi_r),
            chi_c,
            chi_r,
            allocation,
        })
    }

    /// Advances the integral states with the errors of `out`.
    pub fn commit(&mut self, out: &CascadeOutput) {
        let ts = self.sample_time;
        self.integral_c += out.chi_c.fixed_rows::<3>(3) * ts;
        self.integral_r += out.chi_r.fixed_rows::<3>(3) * ts;
    }

    pub fn step(
        &mut self,
        estimate: &GeneralizedState,
        load: &LoadParams,
        reference: &ReferenceSample,
    ) -> Result<CascadeOutput> {
        let out = self.evaluate(estimate, load, reference)?;
        self.commit(&out);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Vec6;
    use approx::assert_relative_eq;

    fn controller() -> CascadeController {
        CascadeController::new(
            VehicleParams::default(),
            WeightSet::translational(),
            WeightSet::rotational(),
            0.01,
        )
        .unwrap()
    }

    #[test]
    fn hover_equilibrium_gives_uniform_split() {
        let mut c = controller();
        let load = LoadParams::new(100.0, 0.5);
        let q = Vec6::new(2.0, 0.0, 1.0, 0.0, 0.0, 0.0);
        let reference = ReferenceSample {
            position: Vec3::new(2.0, 0.0, 1.0),
            ..Default::default()
        };
        let out = c.step(&GeneralizedState::at_rest(q), &load, &reference).unwrap();
        let weight = 153.09 * 9.81;
        assert_relative_eq!(out.total_thrust, weight, epsilon = 1e-9);
        assert_relative_eq!(out.tau, Thrusts::repeat(weight / 8.0), epsilon = 1e-9);
        assert_eq!(out.phi_ref, 0.0);
        assert!(out.theta_ref.abs() < 1e-15);
        assert_eq!(c.integrals(), (Vec3::zeros(), Vec3::zeros()));
    }

    #[test]
    fn integrals_accumulate_errors() {
        let mut c = controller();
        let q = Vec6::new(2.1, 0.0, 1.0, 0.0, 0.0, 0.0);
        let reference = ReferenceSample {
            position: Vec3::new(2.0, 0.0, 1.0),
            ..Default::default()
        };
        c.step(&GeneralizedState::at_rest(q), &LoadParams::default(), &reference)
            .unwrap();
        assert_relative_eq!(c.integrals().0, Vec3::new(0.001, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn evaluate_is_pure() {
        let c = controller();
        let s = GeneralizedState::at_rest(Vec6::new(1.9, 0.0, 0.8, 0.0, 0.0, 0.5));
        let reference = ReferenceSample {
            position: Vec3::new(2.0, 0.0, 1.0),
            velocity: Vec3::new(0.0, 0.314, 0.0),
            ..Default::default()
        };
        let a = c.evaluate(&s, &LoadParams::default(), &reference).unwrap();
        let b = c.evaluate(&s, &LoadParams::default(), &reference).unwrap();
        assert_eq!(a.tau, b.tau);
    }
}
