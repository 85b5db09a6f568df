//! Bounded measurement noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Zero-mean Gaussian with standard deviation `rho`, rejection-truncated to `[−rho, rho]`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedGaussian {
    rho: f64,
    normal: Option<Normal<f64>>,
}

impl TruncatedGaussian {
    pub fn new(rho: f64) -> Self {
        let normal = if rho > 0.0 { Normal::new(0.0, rho).ok() } else { None };
        Self { rho, normal }
    }

    pub fn bound(&self) -> f64 {
        self.rho
    }
}

impl Distribution<f64> for TruncatedGaussian {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some(normal) = self.normal else { return 0.0 };
        loop {
            let v = normal.sample(rng);
            if v.abs() <= self.rho {
                return v;
            }
        }
    }
}

/// `y = w + ν` with `‖ν‖_∞ ≤ ρ`.
pub fn measure<R: Rng + ?Sized>(w: &[f64], noise: &TruncatedGaussian, rng: &mut R) -> Vec<f64> {
    w.iter().map(|&wi| wi + noise.sample(rng)).collect()
}
