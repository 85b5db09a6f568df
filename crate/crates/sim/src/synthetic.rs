//! Uncertainty with a known RKHS norm: a finite kernel expansion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use safegp_core::{gram_matrix, kernel_vector, linalg::dot, DenseMatrix, Kernel, KernelParams};

/// `w(x) = Σ_i a_i q(x, z_i)`, with `‖w‖_H = √(aᵀP(Z)a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExpansion {
    pub centers: DenseMatrix<f64>,
    pub coefficients: Vec<f64>,
    pub kernel: KernelParams<f64>,
}

impl KernelExpansion {
    /// Random centers in `[−half_widths, half_widths]`, coefficients rescaled to the target norm.
    pub fn random(terms: usize, half_widths: &[f64], kernel: KernelParams<f64>, norm: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..terms)
            .map(|_| half_widths.iter().map(|&h| rng.random_range(-h..=h)).collect())
            .collect();
        let centers = DenseMatrix::from_rows(&rows).expect("rows share a width");
        let raw: Vec<f64> = (0..terms).map(|_| rng.sample(StandardNormal)).collect();
        let mut expansion = Self { centers, coefficients: raw, kernel };
        let scale = norm / expansion.rkhs_norm();
        expansion.coefficients.iter_mut().for_each(|a| *a *= scale);
        expansion
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let kv = kernel_vector(x, &self.centers, &self.kernel).expect("state dimension");
        dot(&kv, &self.coefficients)
    }

    pub fn rkhs_norm(&self) -> f64 {
        let p = gram_matrix(&self.centers, &self.kernel);
        let pa = p.mul_vec(&self.coefficients).expect("square");
        dot(&self.coefficients, &pa).max(0.0).sqrt()
    }

    /// `‖w‖_H · √q(x,x)`, an upper bound on `|w(x)|`.
    pub fn sup_bound(&self, x: &[f64]) -> f64 {
        self.rkhs_norm() * self.kernel.diagonal(x).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_is_rescaled_to_target() {
        let k = KernelParams { scale: 100.0, bandwidth: 0.5 };
        let e = KernelExpansion::random(20, &[1.0, 2.0], k, 90.0, 3);
        assert!((e.rkhs_norm() - 90.0).abs() < 1e-9);
        for x in [[0.0, 0.0], [0.5, -1.0], [3.0, 3.0]] {
            assert!(e.value(&x).abs() <= e.sup_bound(&x));
        }
    }
}
