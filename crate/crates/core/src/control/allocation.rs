//! Equality-constrained least-squares thrust allocation,
//! `min 1/2 |u_bar - Bb tau|^2` subject to five linear equalities, solved
//! through its KKT system.
//!
//! Propellers come in coaxial pairs `(1,2), (3,4), (5,6), (7,8)` with
//! opposite spin. Forcing equal thrust inside every pair cancels all drag
//! torques and leaves yaw without authority (the KKT matrix is then singular;
//! see [`COAXIAL_EQUAL_THRUST`]). The default constraint set instead gives
//! every pair the same upper-minus-lower thrust split, balances the two
//! diagonals of pair sums, and fixes the total thrust. With no yaw demand the
//! common split is zero and each pair carries equal thrust.

use nalgebra::{SMatrix, SVector};

use crate::control::laws::Mat3x8;
use crate::error::{Error, Result};
use crate::kinematics::Vec3;
use crate::multibody::{Thrusts, NUM_PROPS};

pub const NUM_CONSTRAINTS: usize = 5;
const KKT_DIM: usize = NUM_PROPS + NUM_CONSTRAINTS;

pub type ConstraintMatrix = SMatrix<f64, NUM_CONSTRAINTS, NUM_PROPS>;

/// Rows: three equal-split rows, diagonal balance, total thrust.
pub const COMMON_SPLIT: [[f64; NUM_PROPS]; NUM_CONSTRAINTS] = [
    [1., -1., -1., 1., 0., 0., 0., 0.],
    [0., 0., 1., -1., -1., 1., 0., 0.],
    [0., 0., 0., 0., 1., -1., -1., 1.],
    [1., 1., -1., -1., 1., 1., -1., -1.],
    [1., 1., 1., 1., 1., 1., 1., 1.],
];

/// Equal thrust within each coaxial pair plus total thrust.
pub const COAXIAL_EQUAL_THRUST: [[f64; NUM_PROPS]; NUM_CONSTRAINTS] = [
    [1., -1., 0., 0., 0., 0., 0., 0.],
    [0., 0., 1., -1., 0., 0., 0., 0.],
    [0., 0., 0., 0., 1., -1., 0., 0.],
    [0., 0., 0., 0., 0., 0., 1., -1.],
    [1., 1., 1., 1., 1., 1., 1., 1.],
];

const SINGULAR_PIVOT: f64 = 1e-12;

pub fn constraint_matrix(rows: &[[f64; NUM_PROPS]; NUM_CONSTRAINTS]) -> ConstraintMatrix {
    ConstraintMatrix::from_fn(|r, c| rows[r][c])
}

/// Right-hand side of the constraints: zeros and the total thrust last.
pub fn constraint_rhs(total_thrust: f64) -> SVector<f64, NUM_CONSTRAINTS> {
    let mut e = SVector::<f64, NUM_CONSTRAINTS>::zeros();
    e[NUM_CONSTRAINTS - 1] = total_thrust;
    e
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThrustAllocation {
    pub tau: Thrusts,
    /// `|u_bar - Bb tau|`
    pub residual: f64,
    /// Largest absolute constraint violation.
    pub constraint_violation: f64,
    pub negative_thrusts: usize,
}

/// Allocation with the default constraint set.
pub fn thrust_allocation(u_bar: &Vec3, total_thrust: f64, b_bar: &Mat3x8) -> Result<ThrustAllocation> {
    allocate_with(u_bar, total_thrust, b_bar, &constraint_matrix(&COMMON_SPLIT))
}

pub fn allocate_with(
    u_bar: &Vec3,
    total_thrust: f64,
    b_bar: &Mat3x8,
    constraints: &ConstraintMatrix,
) -> Result<ThrustAllocation> {
    if !(total_thrust > 0.0) {
        return Err(Error::AllocationDomain(format!(
            "total thrust {total_thrust:.3e} N is not positive"
        )));
    }
    let e = constraint_rhs(total_thrust);

    let mut kkt = SMatrix::<f64, KKT_DIM, KKT_DIM>::zeros();
    kkt.fixed_view_mut::<NUM_PROPS, NUM_PROPS>(0, 0)
        .copy_from(&(b_bar.transpose() * b_bar));
    kkt.fixed_view_mut::<NUM_PROPS, NUM_CONSTRAINTS>(0, NUM_PROPS)
        .copy_from(&constraints.transpose());
    kkt.fixed_view_mut::<NUM_CONSTRAINTS, NUM_PROPS>(NUM_PROPS, 0)
        .copy_from(constraints);
    let mut rhs = SVector::<f64, KKT_DIM>::zeros();
    rhs.fixed_rows_mut::<NUM_PROPS>(0)
        .copy_from(&(b_bar.transpose() * u_bar));
    rhs.fixed_rows_mut::<NUM_CONSTRAINTS>(NUM_PROPS).copy_from(&e);

    // Full-pivot LU exposes rank deficiency through its smallest pivot.
    let lu = kkt.full_piv_lu();
    let u = lu.u();
    let scale = kkt.amax().max(1.0);
    let min_pivot = (0..KKT_DIM).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_PIVOT * scale) {
        return Err(Error::KktSingular);
    }
    let mut sol = lu.solve(&rhs).ok_or(Error::KktSingular)?;
    // one step of iterative refinement
    let corr = lu.solve(&(rhs - kkt * sol)).ok_or(Error::KktSingular)?;
    sol += corr;

    let tau: Thrusts = sol.fixed_rows::<NUM_PROPS>(0).into_owned();
    let residual = (u_bar - b_bar * tau).norm();
    let constraint_violation = (constraints * tau - e).amax();
    Ok(ThrustAllocation {
        residual,
        constraint_violation,
        negative_thrusts: tau.iter().filter(|f| **f < 0.0).count(),
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::laws::{Partition, ReducedAttitudeDynamics};
    use crate::kinematics::{GeneralizedState, Vec6};
    use crate::multibody::{LoadParams, Plant, VehicleParams};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn b_bar_at(q: Vec6, qd: Vec6) -> Mat3x8 {
        let plant = Plant::new(VehicleParams::default(), LoadParams::new(100.0, 0.5));
        let s = GeneralizedState::new(q, qd);
        ReducedAttitudeDynamics::new(&Partition::new(&plant, &s), &s).unwrap().b_bar
    }

    #[test]
    fn zero_command_gives_uniform_split() {
        let b = b_bar_at(Vec6::zeros(), Vec6::zeros());
        let a = thrust_allocation(&Vec3::zeros(), 1500.0, &b).unwrap();
        assert_relative_eq!(a.tau, Thrusts::repeat(1500.0 / 8.0), epsilon = 1e-10);
        assert!((b * Thrusts::repeat(1500.0 / 8.0)).norm() < 1e-12);
        assert!(a.residual < 1e-9);
    }

    #[test]
    fn equal_pair_thrust_cannot_yaw() {
        let b = b_bar_at(Vec6::new(0.0, 0.0, 1.0, 0.05, -0.02, 0.4), Vec6::zeros());
        let err = allocate_with(
            &Vec3::new(0.0, 0.0, 5.0),
            1500.0,
            &b,
            &constraint_matrix(&COAXIAL_EQUAL_THRUST),
        );
        assert_eq!(err, Err(Error::KktSingular));
    }

    #[test]
    fn no_yaw_demand_keeps_pairs_equal() {
        let b = b_bar_at(Vec6::zeros(), Vec6::zeros());
        // roll and pitch only, level attitude
        let a = thrust_allocation(&Vec3::new(12.0, -7.0, 0.0), 1500.0, &b).unwrap();
        for k in 0..4 {
            assert_relative_eq!(a.tau[2 * k], a.tau[2 * k + 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn rejects_nonpositive_total() {
        let b = b_bar_at(Vec6::zeros(), Vec6::zeros());
        assert!(thrust_allocation(&Vec3::zeros(), 0.0, &b).is_err());
    }

    proptest! {
        #[test]
        fn constraints_hold_and_command_is_met(
            att in prop::array::uniform3(-0.4f64..0.4),
            rates in prop::array::uniform3(-1.0f64..1.0),
            u in prop::array::uniform3(-300.0f64..300.0),
            fz in 500.0f64..3000.0,
        ) {
            let b = b_bar_at(Vec6::new(0.0, 0.0, 0.0, att[0], att[1], att[2]),
                             Vec6::new(0.5, -0.2, 0.1, rates[0], rates[1], rates[2]));
            let a = thrust_allocation(&Vec3::from(u), fz, &b).unwrap();
            prop_assert!(a.constraint_violation <= 1e-12, "violation {}", a.constraint_violation);
            prop_assert!(a.residual <= 1e-9, "residual {}", a.residual);
        }

        #[test]
        fn forward_generated_commands_are_reproduced(
            att in prop::array::uniform3(-0.4f64..0.4),
            z in prop::array::uniform3(-40.0f64..40.0),
            fz in 500.0f64..3000.0,
        ) {
            let b = b_bar_at(Vec6::new(0.0, 0.0, 0.0, att[0], att[1], att[2]), Vec6::zeros());
            // tau0 built from the null-space directions of the constraint set
            let roll = Thrusts::from_row_slice(&[1., 1., 1., 1., -1., -1., -1., -1.]);
            let pitch = Thrusts::from_row_slice(&[1., 1., -1., -1., -1., -1., 1., 1.]);
            let yaw = Thrusts::from_row_slice(&[1., -1., 1., -1., 1., -1., 1., -1.]);
            let tau0 = Thrusts::repeat(fz / 8.0) + roll * z[0] + pitch * z[1] + yaw * z[2];
            let c = constraint_matrix(&COMMON_SPLIT);
            prop_assert!((c * tau0 - constraint_rhs(fz)).amax() < 1e-10);
            let target = b * tau0;
            let a = thrust_allocation(&target, fz, &b).unwrap();
            prop_assert!((b * a.tau - target).norm() < 1e-9);
        }
    }
}
