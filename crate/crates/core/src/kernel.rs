//! Kernel evaluation and Gram-matrix construction.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{squared_distance, DenseMatrix};
use crate::scalar::Scalar;

/// A symmetric positive-definite kernel on state vectors.
pub trait Kernel<T: Scalar> {
    /// `q(a, b)`; callers guarantee `a.len() == b.len()`.
    fn eval_unchecked(&self, a: &[T], b: &[T]) -> T;

    /// `q(x, x)`.
    fn diagonal(&self, x: &[T]) -> T {
        self.eval_unchecked(x, x)
    }

    fn eval(&self, a: &[T], b: &[T]) -> Result<T> {
        check_dim(a.len(), b.len())?;
        Ok(self.eval_unchecked(a, b))
    }
}

/// Squared-exponential kernel `scale · exp(-bandwidth · ‖a - b‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams<T> {
    /// Output variance, in units of the modeled quantity squared.
    pub scale: T,
    /// Multiplier on the squared Euclidean distance.
    pub bandwidth: T,
}

impl<T: Scalar> KernelParams<T> {
    pub fn new(scale: T, bandwidth: T) -> Result<Self> {
        let k = Self { scale, bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > T::zero() && self.scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("kernel scale must be positive, got {}", self.scale)));
        }
        if !(self.bandwidth > T::zero() && self.bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kernel bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Kernel<T> for KernelParams<T> {
    #[inline]
    fn eval_unchecked(&self, a: &[T], b: &[T]) -> T {
        self.scale * (-self.bandwidth * squared_distance(a, b)).exp()
    }

    #[inline]
    fn diagonal(&self, _x: &[T]) -> T {
        self.scale
    }
}

pub fn kernel_eval<T: Scalar, K: Kernel<T>>(a: &[T], b: &[T], kernel: &K) -> Result<T> {
    kernel.eval(a, b)
}

/// `[q(x, x_1) … q(x, x_p)]ᵀ` over the rows of `data`.
pub fn kernel_vector<T: Scalar, K: Kernel<T>>(x: &[T], data: &DenseMatrix<T>, kernel: &K) -> Result<Vec<T>> {
    check_dim(data.cols(), x.len())?;
    Ok(data.row_iter().map(|r| kernel.eval_unchecked(x, r)).collect())
}

/// Writes the kernel vector into `out`, skipping row `skip` when given.
pub(crate) fn kernel_vector_into<T: Scalar, K: Kernel<T>>(
    x: &[T],
    data: &DenseMatrix<T>,
    kernel: &K,
    skip: Option<usize>,
    out: &mut Vec<T>,
) {
    out.clear();
    out.extend(
        data.row_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, r)| kernel.eval_unchecked(x, r)),
    );
}

/// The Gram matrix `P(X)`.
pub fn gram_matrix<T: Scalar, K: Kernel<T>>(data: &DenseMatrix<T>, kernel: &K) -> DenseMatrix<T> {
    let p = data.rows();
    let mut g = DenseMatrix::zeros(p, p);
    for i in 0..p {
        g[(i, i)] = kernel.diagonal(data.row(i));
        for j in (i + 1)..p {
            let v = kernel.eval_unchecked(data.row(i), data.row(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `Ω(X) = P(X) + ρ² I`.
pub fn regularized_gram<T: Scalar, K: Kernel<T>>(data: &DenseMatrix<T>, kernel: &K, noise: T) -> DenseMatrix<T> {
    let mut g = gram_matrix(data, kernel);
    g.add_diagonal(noise * noise);
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Cholesky;

    const SE: KernelParams<f64> = KernelParams { scale: 100.0, bandwidth: 0.5 };

    #[test]
    fn self_similarity_is_scale() {
        assert_eq!(kernel_eval(&[0.3, -1.0], &[0.3, -1.0], &SE).unwrap(), 100.0);
        let unit = KernelParams { scale: 1.0, bandwidth: 7.3 };
        assert_eq!(kernel_eval(&[4.0], &[4.0], &unit).unwrap(), 1.0);
    }

    #[test]
    fn two_units_apart() {
        let unit = KernelParams { scale: 1.0f64, bandwidth: 0.5 };
        let v = kernel_eval(&[0.0, 0.0], &[2.0, 0.0], &unit).unwrap();
        assert!((v - 0.135_335_283_236_612_7).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            kernel_eval(&[0.0, 0.0], &[1.0], &SE),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        let x = DenseMatrix::repeat_row(3, &[0.0, 1.0]);
        assert!(kernel_vector(&[1.0], &x, &SE).is_err());
    }

    #[test]
    fn identical_rows() {
        let x = DenseMatrix::repeat_row(4, &[0.2, 0.1]);
        assert!(kernel_vector(&[0.2, 0.1], &x, &SE).unwrap().iter().all(|&v| v == 100.0));
        let g = gram_matrix(&x, &SE);
        assert!(g.as_slice().iter().all(|&v| v == 100.0));
        let single = DenseMatrix::repeat_row(1, &[5.0, 5.0]);
        assert_eq!(gram_matrix(&single, &SE).as_slice(), &[100.0]);
        assert_eq!(kernel_vector(&[5.0, 5.0], &single, &SE).unwrap(), vec![100.0]);
    }

    #[test]
    fn zero_noise_regularization_is_gram() {
        let x = DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.5], [-0.3, 2.0]]).unwrap();
        assert_eq!(regularized_gram(&x, &SE, 0.0), gram_matrix(&x, &SE));
    }

    #[test]
    fn pendulum_scale_gram_factors() {
        // 100 nearly coincident points at the pendulum scale with unit noise.
        let rows: Vec<[f64; 2]> = (0..100).map(|i| [0.1745 + 1e-4 * i as f64, 0.0]).collect();
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let omega = regularized_gram(&x, &SE, 1.0);
        let chol = Cholesky::factor(&omega).expect("regularized gram must be SPD");
        let inv = chol.inverse();
        let id = inv.mul_mat(&omega).unwrap();
        assert!(id.max_abs_diff(&DenseMatrix::identity(100)) < 1e-9);
    }
}
