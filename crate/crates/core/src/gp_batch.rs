//! Direct GP predictive mean, deviation and deterministic bound factor.
//!
//! Everything here goes through a Cholesky factor of `Ω(X) = P(X) + ρ²I`.
//! The streaming model is initialized from, and checked against, this path.

use crate::error::{check_dim, Error, Result};
use crate::kernel::{kernel_vector, regularized_gram, Kernel, KernelParams};
use crate::linalg::{dot, Cholesky, DenseMatrix};
use crate::scalar::Scalar;

/// Relative slack allowed on a negative variance radicand before it is
/// treated as a corrupted inverse.
pub const SIGMA_RADICAND_TOLERANCE: f64 = 1e-9;

/// Mean, deviation and error bound at one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedEstimate<T> {
    pub mean: Vec<T>,
    pub sigma: T,
    pub bound_factor: Vec<T>,
    /// `bound_factor[i] * sigma`
    pub phi: Vec<T>,
    /// Number of bound-factor entries whose radicand went negative and was clamped to zero.
    pub clamped_entries: usize,
}

impl<T: Scalar> BoundedEstimate<T> {
    pub fn new(mean: Vec<T>, sigma: T, bound: BoundFactor<T>) -> Self {
        let phi = bound.entries.iter().map(|&b| b * sigma).collect();
        Self { mean, sigma, bound_factor: bound.entries, phi, clamped_entries: bound.clamped }
    }

    pub fn outputs(&self) -> usize {
        self.mean.len()
    }
}

/// Bound factor entries `√(b² − (YᵀΩ⁻¹Y)_ii + p)` with a clamp count.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundFactor<T> {
    pub entries: Vec<T>,
    pub clamped: usize,
}

impl<T: Scalar> BoundFactor<T> {
    /// `quadratic[i]` is `(YᵀΩ⁻¹Y)_ii`.
    pub fn from_quadratic(rkhs_bound: T, budget: usize, quadratic: impl IntoIterator<Item = T>) -> Self {
        let base = rkhs_bound * rkhs_bound + T::from_usize_lossy(budget);
        let mut clamped = 0;
        let entries = quadratic
            .into_iter()
            .map(|quad| {
                let rad = base - quad;
                if rad < T::zero() {
                    clamped += 1;
                    T::zero()
                } else {
                    rad.sqrt()
                }
            })
            .collect();
        Self { entries, clamped }
    }
}

/// `√(q(x,x) − QᵀΩ⁻¹Q)` given the radicand; tiny negative values clamp to zero.
pub(crate) fn sigma_from_radicand<T: Scalar>(radicand: T, self_similarity: T) -> Result<T> {
    if radicand >= T::zero() {
        return Ok(radicand.sqrt());
    }
    let tol = T::lit(SIGMA_RADICAND_TOLERANCE) * self_similarity.abs();
    if radicand >= -tol {
        Ok(T::zero())
    } else {
        Err(Error::Numerical(format!(
            "posterior variance radicand {radicand} below -{tol}; inverse is corrupted"
        )))
    }
}

/// A GP regression model solved directly from its data.
#[derive(Debug, Clone)]
pub struct BatchModel<T: Scalar> {
    data: DenseMatrix<T>,
    targets: DenseMatrix<T>,
    kernel: KernelParams<T>,
    noise: T,
    rkhs_bound: T,
    factor: Cholesky<T>,
    /// `Ω(X)⁻¹ Y`, one column per output.
    weights: DenseMatrix<T>,
}

impl<T: Scalar> BatchModel<T> {
    pub fn new(
        data: DenseMatrix<T>,
        targets: DenseMatrix<T>,
        kernel: KernelParams<T>,
        noise: T,
        rkhs_bound: T,
    ) -> Result<Self> {
        kernel.validate()?;
        check_dim(data.rows(), targets.rows())?;
        if data.rows() == 0 {
            return Err(Error::Empty("batch model needs at least one data point"));
        }
        if !(noise >= T::zero()) {
            return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {noise}")));
        }
        if !(rkhs_bound > T::zero()) {
            return Err(Error::InvalidConfig(format!("RKHS bound must be positive, got {rkhs_bound}")));
        }
        if !data.is_all_finite() || !targets.is_all_finite() {
            return Err(Error::InvalidConfig("data and targets must be finite".into()));
        }
        let omega = regularized_gram(&data, &kernel, noise);
        let factor = Cholesky::factor(&omega).map_err(|e| match e {
            Error::NotPositiveDefinite { index, pivot } => Error::Numerical(format!(
                "regularized Gram matrix is singular (pivot {pivot} at {index}); duplicate points with zero noise?"
            )),
            other => other,
        })?;
        let weights = factor.solve_mat(&targets)?;
        Ok(Self { data, targets, kernel, noise, rkhs_bound, factor, weights })
    }

    pub fn budget(&self) -> usize {
        self.data.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.data.cols()
    }

    pub fn outputs(&self) -> usize {
        self.targets.cols()
    }

    pub fn data(&self) -> &DenseMatrix<T> {
        &self.data
    }

    pub fn targets(&self) -> &DenseMatrix<T> {
        &self.targets
    }

    pub fn kernel(&self) -> &KernelParams<T> {
        &self.kernel
    }

    pub fn noise(&self) -> T {
        self.noise
    }

    pub fn rkhs_bound(&self) -> T {
        self.rkhs_bound
    }

    /// `Ω(X)⁻¹ Y`
    pub fn weights(&self) -> &DenseMatrix<T> {
        &self.weights
    }

    /// Explicit `Ω(X)⁻¹`, for checking other code paths against.
    pub fn omega_inverse(&self) -> DenseMatrix<T> {
        self.factor.inverse()
    }

    /// `Ω(X)⁻¹ Q(x, X)`, the per-point weight of each target in the mean at `x`.
    pub fn point_weights(&self, x: &[T]) -> Result<Vec<T>> {
        let kv = kernel_vector(x, &self.data, &self.kernel)?;
        self.factor.solve_vec(&kv)
    }

    /// `Yᵀ Ω(X)⁻¹ Q(x, X)`
    pub fn mean(&self, x: &[T]) -> Result<Vec<T>> {
        let kv = kernel_vector(x, &self.data, &self.kernel)?;
        self.weights.tr_mul_vec(&kv)
    }

    /// `√(q(x,x) − Q(x,X)ᵀ Ω(X)⁻¹ Q(x,X))`
    pub fn sigma(&self, x: &[T]) -> Result<T> {
        let mut z = kernel_vector(x, &self.data, &self.kernel)?;
        self.factor.forward_substitute(&mut z);
        let qxx = self.kernel.diagonal(x);
        sigma_from_radicand(qxx - dot(&z, &z), qxx)
    }

    /// Entries `√(b² − (YᵀΩ(X)⁻¹Y)_ii + p)`.
    pub fn bound_factor(&self) -> BoundFactor<T> {
        let quad = (0..self.outputs()).map(|i| {
            self.targets
                .row_iter()
                .zip(self.weights.row_iter())
                .map(|(y, w)| y[i] * w[i])
                .sum::<T>()
        });
        BoundFactor::from_quadratic(self.rkhs_bound, self.budget(), quad)
    }

    /// `B(X,Y) σ(x,X)` element-wise.
    pub fn error_bound(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.predict(x)?.phi)
    }

    pub fn predict(&self, x: &[T]) -> Result<BoundedEstimate<T>> {
        Ok(BoundedEstimate::new(self.mean(x)?, self.sigma(x)?, self.bound_factor()))
    }
}
