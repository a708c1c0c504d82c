//! Unscented transform with `2n` symmetric sigma points of equal weight
//! `1/(2n)`, generic over the state and measurement dimensions.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// Diagonal jitter added on the single Cholesky retry.
pub const CHOLESKY_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief<const N: usize> {
    pub mean: SVector<f64, N>,
    pub cov: SMatrix<f64, N, N>,
}

impl<const N: usize> Belief<N> {
    pub fn new(mean: SVector<f64, N>, cov: SMatrix<f64, N, N>) -> Self {
        Self { mean, cov }
    }

    /// Square roots of the diagonal of the covariance.
    pub fn std_devs(&self) -> SVector<f64, N> {
        self.cov.diagonal().map(|v| v.max(0.0).sqrt())
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite())
    }
}

pub fn symmetrize<const N: usize>(p: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (p + p.transpose()) * 0.5
}

/// Lower Cholesky factor `S` with `S S^T = P`, retrying once with
/// `P + 1e-9 I`. The flag reports whether the retry was needed.
pub fn cholesky_lower<const N: usize>(p: &SMatrix<f64, N, N>) -> Result<(SMatrix<f64, N, N>, bool)> {
    if let Some(ch) = p.cholesky() {
        return Ok((ch.l(), false));
    }
    let jittered = p + SMatrix::<f64, N, N>::identity() * CHOLESKY_JITTER;
    jittered
        .cholesky()
        .map(|ch| (ch.l(), true))
        .ok_or(Error::NotPositiveDefinite)
}

/// Sigma-point set `mean +/- sqrt(N) S e_i`.
#[derive(Debug, Clone)]
pub struct SigmaPoints<const N: usize> {
    pub points: Vec<SVector<f64, N>>,
    pub jitter_used: bool,
}

impl<const N: usize> SigmaPoints<N> {
    pub const WEIGHT: f64 = 1.0 / (2 * N) as f64;
}

pub fn sigma_points<const N: usize>(belief: &Belief<N>) -> Result<SigmaPoints<N>> {
    let (s, jitter_used) = cholesky_lower(&belief.cov)?;
    let scaled = s * (N as f64).sqrt();
    let mut points = Vec::with_capacity(2 * N);
    for i in 0..N {
        points.push(belief.mean + scaled.column(i));
    }
    for i in 0..N {
        points.push(belief.mean - scaled.column(i));
    }
    Ok(SigmaPoints { points, jitter_used })
}

fn weighted_mean<const M: usize>(points: &[SVector<f64, M>], weight: f64) -> SVector<f64, M> {
    points.iter().fold(SVector::zeros(), |acc, p| acc + p) * weight
}

/// Propagates the belief through `f` and adds `process_cov` once.
pub fn predict<const N: usize, F>(
    belief: &Belief<N>,
    mut f: F,
    process_cov: &SMatrix<f64, N, N>,
) -> Result<Belief<N>>
where
    F: FnMut(&SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let sigma = sigma_points(belief)?;
    let rho = SigmaPoints::<N>::WEIGHT;
    let images = sigma
        .points
        .iter()
        .map(&mut f)
        .collect::<Result<Vec<_>>>()?;
    let mean = weighted_mean(&images, rho);
    let mut cov = *process_cov;
    for img in &images {
        let d = img - mean;
        cov += d * d.transpose() * rho;
    }
    Ok(Belief::new(mean, symmetrize(&cov)))
}

/// Quantities of one measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Innovation<const M: usize> {
    pub predicted: SVector<f64, M>,
    pub residual: SVector<f64, M>,
    pub cov: SMatrix<f64, M, M>,
}

/// Conditions the belief on `y = h(x) + v`, `v ~ N(0, meas_cov)`.
pub fn update<const N: usize, const M: usize, H>(
    belief: &Belief<N>,
    y: &SVector<f64, M>,
    h: H,
    meas_cov: &SMatrix<f64, M, M>,
) -> Result<(Belief<N>, Innovation<M>)>
where
    H: Fn(&SVector<f64, N>) -> SVector<f64, M>,
{
    let sigma = sigma_points(belief)?;
    let rho = SigmaPoints::<N>::WEIGHT;
    let images: Vec<_> = sigma.points.iter().map(&h).collect();
    let y_bar = weighted_mean(&images, rho);

    let mut p_y = *meas_cov;
    let mut p_xy = SMatrix::<f64, N, M>::zeros();
    for (pt, img) in sigma.points.iter().zip(&images) {
        let dy = img - y_bar;
        p_y += dy * dy.transpose() * rho;
        p_xy += (pt - belief.mean) * dy.transpose() * rho;
    }
    let p_y = symmetrize(&p_y);

    // K = P_xy P_y^-1 through the Cholesky factor of P_y
    let chol = p_y.cholesky().ok_or(Error::InnovationCovSingular)?;
    let gain = chol.solve(&p_xy.transpose()).transpose();
    let residual = y - y_bar;
    let mean = belief.mean + gain * residual;
    let cov = symmetrize(&(belief.cov - gain * p_y * gain.transpose()));
    Ok((
        Belief::new(mean, cov),
        Innovation {
            predicted: y_bar,
            residual,
            cov: p_y,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Vector1, Vector2};
    use proptest::prelude::*;

    type M4 = SMatrix<f64, 4, 4>;
    type V4 = SVector<f64, 4>;

    fn spd4(entries: &[f64]) -> M4 {
        let l = M4::from_fn(|r, c| if r >= c { entries[r * 4 + c] } else { 0.0 });
        l * l.transpose() + M4::identity() * 0.1
    }

    #[test]
    fn cholesky_trivial_factors() {
        let (s, jitter) = cholesky_lower(&Matrix2::identity()).unwrap();
        assert_eq!(s, Matrix2::identity());
        assert!(!jitter);
        let (s, _) = cholesky_lower(&Matrix2::new(4.0, 0.0, 0.0, 9.0)).unwrap();
        assert_eq!(s, Matrix2::new(2.0, 0.0, 0.0, 3.0));
    }

    #[test]
    fn cholesky_jitter_then_error() {
        let (_, jitter) = cholesky_lower(&Matrix2::new(1.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(jitter);
        assert_eq!(
            cholesky_lower(&Matrix2::new(1.0, 0.0, 0.0, -1.0)),
            Err(Error::NotPositiveDefinite)
        );
    }

    #[test]
    fn scalar_sigma_points() {
        let b = Belief::new(Vector1::new(0.0), SMatrix::<f64, 1, 1>::new(1.0));
        let s = sigma_points(&b).unwrap();
        assert_eq!(s.points, vec![Vector1::new(1.0), Vector1::new(-1.0)]);
        assert_eq!(SigmaPoints::<1>::WEIGHT, 0.5);
    }

    #[test]
    fn scalar_posterior() {
        let prior = Belief::new(Vector1::new(0.0), SMatrix::<f64, 1, 1>::new(1.0));
        let (post, inn) = update(
            &prior,
            &Vector1::new(1.0),
            |x| *x,
            &SMatrix::<f64, 1, 1>::new(1.0),
        )
        .unwrap();
        assert!((post.mean[0] - 0.5).abs() <= 1e-12);
        assert!((post.cov[(0, 0)] - 0.5).abs() <= 1e-12);
        assert_eq!(inn.cov[(0, 0)], 2.0);
    }

    #[test]
    fn zero_innovation_shrinks_covariance() {
        let prior = Belief::new(Vector2::new(1.0, -2.0), Matrix2::new(2.0, 0.3, 0.3, 1.0));
        let h = |x: &Vector2<f64>| Vector1::new(x[0] + x[1]);
        let (post, _) = update(&prior, &Vector1::new(-1.0), h, &SMatrix::<f64, 1, 1>::new(0.5)).unwrap();
        assert_relative_eq!(post.mean, prior.mean, epsilon = 1e-14);
        let diff = prior.cov - post.cov;
        assert!(diff.symmetric_eigenvalues().min() >= -1e-12);
    }

    #[test]
    fn constant_map_collapses_spread() {
        let prior = Belief::new(Vector2::new(1.0, 2.0), Matrix2::identity());
        let pred = predict(&prior, |_| Ok(Vector2::new(3.0, 4.0)), &Matrix2::zeros()).unwrap();
        assert_eq!(pred.mean, Vector2::new(3.0, 4.0));
        assert_eq!(pred.cov, Matrix2::zeros());
    }

    proptest! {
        #[test]
        fn moment_matching(
            l in prop::collection::vec(-2.0f64..2.0, 16),
            m in prop::array::uniform4(-10.0f64..10.0),
        ) {
            let cov = spd4(&l);
            let b = Belief::new(V4::from(m), cov);
            let s = sigma_points(&b).unwrap();
            prop_assert_eq!(s.points.len(), 8);
            let rho = SigmaPoints::<4>::WEIGHT;
            let mean = weighted_mean(&s.points, rho);
            prop_assert!((mean - b.mean).amax() <= 1e-12 * (1.0 + b.mean.amax()));
            let mut c = M4::zeros();
            for p in &s.points {
                let d = p - b.mean;
                c += d * d.transpose() * rho;
            }
            prop_assert!((c - cov).amax() <= 1e-10);
        }

        #[test]
        fn linear_predict_matches_kalman(
            l in prop::collection::vec(-2.0f64..2.0, 16),
            f in prop::collection::vec(-1.5f64..1.5, 16),
            q in prop::collection::vec(-1.0f64..1.0, 16),
            m in prop::array::uniform4(-5.0f64..5.0),
        ) {
            let cov = spd4(&l);
            let fm = M4::from_row_slice(&f);
            let qm = spd4(&q);
            let b = Belief::new(V4::from(m), cov);
            let pred = predict(&b, |x| Ok(fm * x), &qm).unwrap();
            prop_assert!((pred.mean - fm * b.mean).amax() <= 1e-8);
            prop_assert!((pred.cov - (fm * cov * fm.transpose() + qm)).amax() <= 1e-8);
        }

        #[test]
        fn linear_update_matches_kalman(
            l in prop::collection::vec(-2.0f64..2.0, 16),
            h in prop::collection::vec(-1.5f64..1.5, 8),
            m in prop::array::uniform4(-5.0f64..5.0),
            y in prop::array::uniform2(-5.0f64..5.0),
            r in prop::array::uniform2(0.1f64..2.0),
        ) {
            let cov = spd4(&l);
            let hm = SMatrix::<f64, 2, 4>::from_row_slice(&h);
            let rm = Matrix2::from_diagonal(&Vector2::from(r));
            let b = Belief::new(V4::from(m), cov);
            let y = Vector2::from(y);
            let (post, _) = update(&b, &y, |x| hm * x, &rm).unwrap();

            let s = hm * cov * hm.transpose() + rm;
            let k = cov * hm.transpose() * s.try_inverse().unwrap();
            let mean = b.mean + k * (y - hm * b.mean);
            let pc = (M4::identity() - k * hm) * cov;
            prop_assert!((post.mean - mean).amax() <= 1e-8);
            prop_assert!((post.cov - pc).amax() <= 1e-8);
        }
    }
}
