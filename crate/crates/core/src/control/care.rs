//! Structured continuous-time algebraic Riccati equation
//! `Q A + A^T Q - Q B Q + Psi = 0` for the integral/error/error-rate state of
//! one three-DOF group.
//!
//! The solver takes the stable invariant subspace of the Hamiltonian
//! `[[A, -B], [-Psi, -A^T]]` through the scaled matrix-sign iteration, then
//! polishes the symmetrized result with Newton-Kleinman sweeps.

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Mat3, Vec3};

pub const CHI_DIM: usize = 9;
pub type Mat9 = SMatrix<f64, CHI_DIM, CHI_DIM>;

/// Residual bound accepted by [`solve_care`].
pub const CARE_RESIDUAL_TOL: f64 = 1e-8;

const SIGN_MAX_ITERS: usize = 100;
const SIGN_TOL: f64 = 1e-13;
const NEWTON_SWEEPS: usize = 2;
const SCHUR_TOL: f64 = 1e-12;
const SCHUR_MAX_ITERS: usize = 100_000;

/// Diagonal weights `(Y0, Y1, Y2, Y3)` on the integral, error, error-rate and
/// error-acceleration of the cost variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSet {
    pub y0: [f64; 3],
    pub y1: [f64; 3],
    pub y2: [f64; 3],
    pub y3: [f64; 3],
}

impl WeightSet {
    /// Translational (controlled-DOF) tuning of the load-transport scenario.
    pub fn translational() -> Self {
        Self {
            y0: [5.0, 5.0, 10.0],
            y1: [10.0, 10.0, 50.0],
            y2: [1.0, 1.0, 1.0],
            y3: [6.0, 6.0, 1.0],
        }
    }

    /// Attitude (regulated-DOF) tuning of the load-transport scenario.
    pub fn rotational() -> Self {
        Self {
            y0: [1.0, 1.0, 1.0],
            y1: [10.0, 10.0, 10.0],
            y2: [0.2, 0.2, 0.2],
            y3: [0.05, 0.05, 0.05],
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        for (label, d) in [("y0", self.y0), ("y1", self.y1), ("y2", self.y2), ("y3", self.y3)] {
            if d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid(
                    format!("{name}.{label}"),
                    "diagonal entries must be finite and > 0",
                ));
            }
        }
        Ok(())
    }

    /// `Y3^-1` as a vector of diagonal entries.
    pub fn y3_inverse(&self) -> Vec3 {
        Vec3::from(self.y3).map(|v| 1.0 / v)
    }
}

/// The `(A, B, Psi)` triple of the structured CARE.
#[derive(Debug, Clone, PartialEq)]
pub struct CareMatrices {
    pub a: Mat9,
    pub b: Mat9,
    pub psi: Mat9,
}

fn diag3(d: [f64; 3]) -> Mat3 {
    Mat3::from_diagonal(&Vec3::from(d))
}

pub fn build_care_matrices(w: &WeightSet) -> CareMatrices {
    let mut a = Mat9::zeros();
    a.fixed_view_mut::<3, 3>(0, 3).copy_from(&Mat3::identity());
    a.fixed_view_mut::<3, 3>(3, 6).copy_from(&Mat3::identity());

    let mut b = Mat9::zeros();
    b.fixed_view_mut::<3, 3>(6, 6)
        .copy_from(&Mat3::from_diagonal(&w.y3_inverse()));

    let mut psi = Mat9::zeros();
    psi.fixed_view_mut::<3, 3>(0, 0).copy_from(&diag3(w.y0));
    psi.fixed_view_mut::<3, 3>(3, 3).copy_from(&diag3(w.y1));
    psi.fixed_view_mut::<3, 3>(6, 6).copy_from(&diag3(w.y2));
    CareMatrices { a, b, psi }
}

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub q: Mat9,
    /// Frobenius norm of `Q A + A^T Q - Q B Q + Psi`.
    pub residual_norm: f64,
    /// Eigenvalues of `A - B Q`.
    pub closed_loop_eigenvalues: Vec<Complex<f64>>,
}

impl RiccatiSolution {
    pub fn max_closed_loop_real(&self) -> f64 {
        self.closed_loop_eigenvalues
            .iter()
            .map(|e| e.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `V = chi^T Q chi / 2`.
    pub fn value(&self, chi: &SMatrix<f64, CHI_DIM, 1>) -> f64 {
        0.5 * chi.dot(&(self.q * chi))
    }
}

pub fn care_residual(q: &Mat9, m: &CareMatrices) -> Mat9 {
    q * m.a + m.a.transpose() * q - q * m.b * q + m.psi
}

fn to_dyn(m: &Mat9) -> DMatrix<f64> {
    DMatrix::from_column_slice(CHI_DIM, CHI_DIM, m.as_slice())
}

fn hamiltonian(m: &CareMatrices) -> DMatrix<f64> {
    let n = CHI_DIM;
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&to_dyn(&m.a));
    h.view_mut((0, n), (n, n)).copy_from(&(-to_dyn(&m.b)));
    h.view_mut((n, 0), (n, n)).copy_from(&(-to_dyn(&m.psi)));
    h.view_mut((n, n), (n, n))
        .copy_from(&(-to_dyn(&m.a.transpose())));
    h
}

/// Matrix sign function by Newton iteration with determinant scaling.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = h.nrows() as f64;
    let mut z = h.clone();
    for _ in 0..SIGN_MAX_ITERS {
        let lu = z.clone().lu();
        let det = lu.determinant();
        let inv = lu
            .try_inverse()
            .ok_or_else(|| Error::SolveFailure("Hamiltonian has eigenvalues on the imaginary axis".into()))?;
        let c = det.abs().powf(1.0 / n);
        let scale = if c.is_finite() && c > 0.0 { c } else { 1.0 };
        let next = (&z / scale + inv * scale) * 0.5;
        let delta = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if delta <= SIGN_TOL * size {
            return Ok(z);
        }
    }
    Err(Error::SolveFailure("sign iteration did not converge".into()))
}

fn stable_subspace_solution(m: &CareMatrices) -> Result<Mat9> {
    let n = CHI_DIM;
    let sign = matrix_sign(&hamiltonian(m))?;
    let w11 = sign.view((0, 0), (n, n));
    let w12 = sign.view((0, n), (n, n));
    let w21 = sign.view((n, 0), (n, n));
    let w22 = sign.view((n, n), (n, n));
    let eye = DMatrix::<f64>::identity(n, n);

    // [W12; W22 + I] Q = [-(I + W11); -W21]
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));

    let q = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::SolveFailure(e.to_string()))?;
    Ok(Mat9::from_column_slice(q.as_slice()))
}

/// Solves `A_k^T X + X A_k = -R` through the Kronecker form.
fn solve_lyapunov(a_k: &Mat9, r: &Mat9) -> Result<Mat9> {
    let n = CHI_DIM;
    let at = to_dyn(&a_k.transpose());
    let eye = DMatrix::<f64>::identity(n, n);
    let big = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -nalgebra::DVector::from_column_slice(r.as_slice());
    let x = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailure("singular Lyapunov operator".into()))?;
    Ok(Mat9::from_column_slice(x.as_slice()))
}

fn symmetrize(q: &Mat9) -> Mat9 {
    (q + q.transpose()) * 0.5
}

pub fn solve_care(m: &CareMatrices) -> Result<RiccatiSolution> {
    let mut q = symmetrize(&stable_subspace_solution(m)?);
    for _ in 0..NEWTON_SWEEPS {
        let a_k = m.a - m.b * q;
        let r = m.psi + q * m.b * q;
        let next = symmetrize(&solve_lyapunov(&a_k, &r)?);
        if next.iter().all(|v| v.is_finite()) {
            q = next;
        }
    }

    let residual_norm = care_residual(&q, m).norm();
    if !(residual_norm <= CARE_RESIDUAL_TOL) {
        return Err(Error::SolveFailure(format!(
            "residual {residual_norm:.3e} exceeds {CARE_RESIDUAL_TOL:.0e}"
        )));
    }
    if q.cholesky().is_none() {
        return Err(Error::SolveFailure("solution is not positive definite".into()));
    }
    let closed_loop_eigenvalues = eigenvalues(&(m.a - m.b * q))?;
    let solution = RiccatiSolution {
        q,
        residual_norm,
        closed_loop_eigenvalues,
    };
    if !(solution.max_closed_loop_real() < 0.0) {
        return Err(Error::SolveFailure("closed loop is not Hurwitz".into()));
    }
    Ok(solution)
}

/// Eigenvalues through a bounded real Schur decomposition.
pub(crate) fn eigenvalues(m: &Mat9) -> Result<Vec<Complex<f64>>> {
    let schur = nalgebra::Schur::try_new(*m, SCHUR_TOL, SCHUR_MAX_ITERS)
        .ok_or_else(|| Error::SolveFailure("eigenvalue iteration did not converge".into()))?;
    let eig = schur.complex_eigenvalues();
    Ok(eig.iter().copied().collect())
}

/// Convenience: builds the matrices for `w` and solves.
pub fn synthesize(w: &WeightSet) -> Result<RiccatiSolution> {
    solve_care(&build_care_matrices(w))
}
