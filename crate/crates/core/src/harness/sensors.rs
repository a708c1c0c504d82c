//! Simulated fused measurement `y = (xi, eta, omega) + v`.
//!
//! Every channel draws from its own ChaCha20 stream (rand_chacha 0.9) keyed by
//! the run seed, so switching one channel's noise off leaves the others
//! unchanged.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::estimation::{measurement_model, MeasVec, MEAS_DIM};
use crate::kinematics::GeneralizedState;

/// First stream index used for measurement noise.
pub const MEASUREMENT_STREAM_BASE: u64 = 0x100;

#[derive(Debug, Clone)]
pub struct SensorModel {
    std_dev: [f64; MEAS_DIM],
    streams: Vec<ChaCha20Rng>,
}

impl SensorModel {
    /// `variance` holds the diagonal of the measurement covariance.
    pub fn new(seed: u64, variance: &[f64; MEAS_DIM]) -> Self {
        let streams = (0..MEAS_DIM as u64)
            .map(|ch| {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(MEASUREMENT_STREAM_BASE + ch);
                rng
            })
            .collect();
        Self {
            std_dev: variance.map(|v| v.max(0.0).sqrt()),
            streams,
        }
    }

    pub fn noiseless() -> Self {
        Self::new(0, &[0.0; MEAS_DIM])
    }

    pub fn measure(&mut self, state: &GeneralizedState) -> MeasVec {
        let mut mu = crate::estimation::jukf::AugVec::zeros();
        mu.fixed_rows_mut::<12>(0).copy_from(&state.to_stacked());
        let mut y = measurement_model(&mu);
        for (i, rng) in self.streams.iter_mut().enumerate() {
            let n: f64 = StandardNormal.sample(rng);
            if self.std_dev[i] > 0.0 {
                y[i] += self.std_dev[i] * n;
            }
        }
        y
    }
}
