//! Fixed-budget streaming GP.
//!
//! The dataset always holds exactly `p` points split into a local group
//! (refines the model near the current state) and a global group (keeps the
//! model valid elsewhere). Each update:
//!
//! 1. picks the local point `j` with the smallest weight `|(Σ Q(x_k, X))_j|`,
//! 2. moves `j` to the global group and drops the global point `l` with the
//!    largest correlation sum `ς_l = (P(X) 1)_l`,
//! 3. appends the new sample as a local point,
//!
//! and maintains `Σ = Ω(X)⁻¹`, `ϑ = Ω(X)⁻¹ Y` and `ς = P(X) 1` with a
//! Schur-complement downdate followed by a bordered extension, so no step
//! costs more than O(p²).

use crate::error::{check_dim, Error, Result};
use crate::gp_batch::{sigma_from_radicand, BatchModel, BoundFactor, BoundedEstimate};
use crate::kernel::{gram_matrix, kernel_vector, kernel_vector_into, Kernel, KernelParams};
use crate::linalg::{dot, DenseMatrix};
use crate::scalar::Scalar;

/// Relative floor on the bordered-extension Schur complement `τ`.
pub const TAU_FLOOR: f64 = 1e-12;

/// Which group a stored point belongs to. Exported as `c = 0` for local and
/// `c = 1` for global.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partition {
    Local,
    Global,
}

impl Partition {
    pub fn flag(self) -> u8 {
        match self {
            Partition::Local => 0,
            Partition::Global => 1,
        }
    }

    pub fn from_flag(flag: u8) -> Option<Self> {
        match flag {
            0 => Some(Partition::Local),
            1 => Some(Partition::Global),
            _ => None,
        }
    }
}

/// Form of the last entry of the correlation-sum recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarsigmaRule {
    /// `Q(x_k, X̲)ᵀ1 + q(x_k, x_k)`, which keeps `ς = P(X) 1` exact.
    #[default]
    Corrected,
    /// `Q(x_k, X_k)ᵀ1` over the pre-removal dataset. Kept only so the
    /// regression suite can show it breaks `ς = P(X) 1`.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig<T> {
    /// Total budget `p`.
    pub budget: usize,
    /// Local budget `p_l`, `0 < p_l < p`.
    pub local_budget: usize,
    /// Noise level `ρ`; measurement noise is bounded by it in sup-norm.
    pub noise: T,
    /// Trusted bound `b` on the RKHS norm of every modeled output.
    pub rkhs_bound: T,
    pub kernel: KernelParams<T>,
    /// Sample period `T_s` in seconds.
    pub sample_period: T,
    /// Blend rate `η ≥ 1`.
    pub blend_rate: T,
    /// Recompute the recursive state directly every this many updates; 0 disables.
    pub refresh_interval: usize,
    pub varsigma_rule: VarsigmaRule,
}

impl<T: Scalar> ModelConfig<T> {
    pub fn global_budget(&self) -> usize {
        self.budget - self.local_budget
    }

    /// Estimate before any data: `μ₀ = 0` and `φ₀ = √q(x,x) · √(b² + p)` on every output.
    pub fn prior_estimate(&self, x: &[T], outputs: usize) -> BoundedEstimate<T> {
        let bound = BoundFactor::from_quadratic(self.rkhs_bound, self.budget, vec![T::zero(); outputs]);
        BoundedEstimate::new(vec![T::zero(); outputs], self.kernel.diagonal(x).sqrt(), bound)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.local_budget == 0 || self.local_budget >= self.budget {
            return Err(Error::InvalidConfig(format!(
                "local budget must satisfy 0 < p_l < p (p = {}, p_l = {})",
                self.budget, self.local_budget
            )));
        }
        if !(self.noise >= T::zero() && self.noise.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise level must be nonnegative, got {}", self.noise)));
        }
        if !(self.rkhs_bound > T::zero() && self.rkhs_bound.is_finite()) {
            return Err(Error::InvalidConfig(format!("RKHS bound must be positive, got {}", self.rkhs_bound)));
        }
        if !(self.sample_period > T::zero() && self.sample_period.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample period must be positive, got {}",
                self.sample_period
            )));
        }
        if !(self.blend_rate >= T::one() && self.blend_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("blend rate must be at least 1, got {}", self.blend_rate)));
        }
        Ok(())
    }
}

/// Indices chosen by one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport<T> {
    /// Local point demoted to the global group.
    pub local_victim: usize,
    /// Point removed from the dataset (pre-removal index).
    pub removed: usize,
    /// Schur complement of the appended point.
    pub tau: T,
    /// Whether this update ended with a direct recomputation.
    pub refreshed: bool,
}

/// Initial flag layout: the first `p_g` points global, the remaining `p_l` local.
pub fn initial_partition(budget: usize, local_budget: usize) -> Vec<Partition> {
    (0..budget)
        .map(|i| if i < budget - local_budget { Partition::Global } else { Partition::Local })
        .collect()
}

/// `argmin_{j local} |weights_j|`, lowest index on ties.
pub fn argmin_local_weight<T: Scalar>(partition: &[Partition], weights: &[T]) -> Result<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, (&part, &w)) in partition.iter().zip(weights).enumerate() {
        if part != Partition::Local {
            continue;
        }
        let w = w.abs();
        match best {
            Some((_, b)) if !(w < b) => {}
            _ => best = Some((i, w)),
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Empty("no local points in the dataset"))
}

/// `argmax_{l ∈ global ∪ {victim}} row_sums_l`, lowest index on ties.
pub fn argmax_correlation<T: Scalar>(partition: &[Partition], row_sums: &[T], victim: usize) -> usize {
    let mut best = victim;
    let mut best_val = row_sums[victim];
    for (i, (&part, &v)) in partition.iter().zip(row_sums).enumerate() {
        if part != Partition::Global && i != victim {
            continue;
        }
        if v > best_val || (v == best_val && i < best) {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Applies the dataset bookkeeping of one update: demote `victim`, drop
/// `removed`, append the new point as local.
fn rebuild_dataset<T: Scalar>(
    data: &mut DenseMatrix<T>,
    targets: &mut DenseMatrix<T>,
    partition: &mut Vec<Partition>,
    victim: usize,
    removed: usize,
    x: &[T],
    y: &[T],
) -> Result<()> {
    partition[victim] = Partition::Global;
    partition.remove(removed);
    partition.push(Partition::Local);
    data.remove_row(removed);
    data.push_row(x)?;
    targets.remove_row(removed);
    targets.push_row(y)
}

fn row_sums<T: Scalar>(m: &DenseMatrix<T>) -> Vec<T> {
    m.row_iter().map(|r| r.iter().copied().sum()).collect()
}

fn diag_quadratic<T: Scalar>(weights: &DenseMatrix<T>, targets: &DenseMatrix<T>) -> Vec<T> {
    (0..targets.cols())
        .map(|i| weights.row_iter().zip(targets.row_iter()).map(|(w, y)| w[i] * y[i]).sum())
        .collect()
}

/// Directly computed `(Ω⁻¹, Ω⁻¹Y, P1)` for a dataset.
#[derive(Debug, Clone)]
pub struct DirectState<T: Scalar> {
    pub inverse: DenseMatrix<T>,
    pub weights: DenseMatrix<T>,
    pub row_sums: Vec<T>,
}

impl<T: Scalar> DirectState<T> {
    pub fn compute(
        data: &DenseMatrix<T>,
        targets: &DenseMatrix<T>,
        kernel: &KernelParams<T>,
        noise: T,
        rkhs_bound: T,
    ) -> Result<Self> {
        let batch = BatchModel::new(data.clone(), targets.clone(), *kernel, noise, rkhs_bound)?;
        Ok(Self {
            inverse: batch.omega_inverse(),
            weights: batch.weights().clone(),
            row_sums: row_sums(&gram_matrix(data, kernel)),
        })
    }
}

/// A fixed-budget GP maintained recursively in O(p²) per sample.
#[derive(Debug, Clone)]
pub struct StreamingModel<T: Scalar> {
    config: ModelConfig<T>,
    data: DenseMatrix<T>,
    targets: DenseMatrix<T>,
    partition: Vec<Partition>,
    /// `Σ = Ω(X)⁻¹`
    inverse: DenseMatrix<T>,
    /// `ϑ = Ω(X)⁻¹ Y`
    weights: DenseMatrix<T>,
    /// `ς = P(X) 1`
    row_sums: Vec<T>,
    bound: BoundFactor<T>,
    step: u64,
}

impl<T: Scalar> StreamingModel<T> {
    /// Fills all `p` rows with `(x0, y0)` and computes the recursive state directly.
    pub fn init(x0: &[T], y0: &[T], config: ModelConfig<T>) -> Result<Self> {
        config.validate()?;
        let data = DenseMatrix::repeat_row(config.budget, x0);
        let targets = DenseMatrix::repeat_row(config.budget, y0);
        let partition = initial_partition(config.budget, config.local_budget);
        Self::from_dataset(data, targets, partition, config)
    }

    /// Starts from an arbitrary dataset and partition.
    pub fn from_dataset(
        data: DenseMatrix<T>,
        targets: DenseMatrix<T>,
        partition: Vec<Partition>,
        config: ModelConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        check_dim(config.budget, data.rows())?;
        check_dim(config.budget, targets.rows())?;
        check_dim(config.budget, partition.len())?;
        let locals = partition.iter().filter(|&&p| p == Partition::Local).count();
        if locals != config.local_budget {
            return Err(Error::InvalidConfig(format!(
                "partition has {locals} local points, expected {}",
                config.local_budget
            )));
        }
        let direct = DirectState::compute(&data, &targets, &config.kernel, config.noise, config.rkhs_bound)?;
        let bound = BoundFactor::from_quadratic(config.rkhs_bound, config.budget, diag_quadratic(&direct.weights, &targets));
        Ok(Self {
            config,
            data,
            targets,
            partition,
            inverse: direct.inverse,
            weights: direct.weights,
            row_sums: direct.row_sums,
            bound,
            step: 0,
        })
    }

    /// Reassembles a model from previously captured state without recomputing it.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        config: ModelConfig<T>,
        step: u64,
        data: DenseMatrix<T>,
        targets: DenseMatrix<T>,
        partition: Vec<Partition>,
        inverse: DenseMatrix<T>,
        weights: DenseMatrix<T>,
        row_sums: Vec<T>,
    ) -> Result<Self> {
        config.validate()?;
        let p = config.budget;
        check_dim(p, data.rows())?;
        check_dim(p, targets.rows())?;
        check_dim(p, partition.len())?;
        check_dim(p, inverse.rows())?;
        check_dim(p, inverse.cols())?;
        check_dim(p, weights.rows())?;
        check_dim(targets.cols(), weights.cols())?;
        check_dim(p, row_sums.len())?;
        let bound = BoundFactor::from_quadratic(config.rkhs_bound, p, diag_quadratic(&weights, &targets));
        Ok(Self { config, data, targets, partition, inverse, weights, row_sums, bound, step })
    }

    pub fn config(&self) -> &ModelConfig<T> {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn budget(&self) -> usize {
        self.config.budget
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

    pub fn partition(&self) -> &[Partition] {
        &self.partition
    }

    /// The partition as the 0/1 vector `c`.
    pub fn flags(&self) -> Vec<u8> {
        self.partition.iter().map(|p| p.flag()).collect()
    }

    pub fn inverse(&self) -> &DenseMatrix<T> {
        &self.inverse
    }

    pub fn weights(&self) -> &DenseMatrix<T> {
        &self.weights
    }

    pub fn row_sums(&self) -> &[T] {
        &self.row_sums
    }

    pub fn bound_factor(&self) -> &BoundFactor<T> {
        &self.bound
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        if x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Numerical("non-finite query state".into()))
        }
    }

    /// `Σ Q(x, X)`
    pub fn point_weights(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let kv = kernel_vector(x, &self.data, &self.config.kernel)?;
        self.inverse.mul_vec(&kv)
    }

    /// Local point with the least weight on the mean at `x`.
    pub fn select_local_victim(&self, x: &[T]) -> Result<usize> {
        argmin_local_weight(&self.partition, &self.point_weights(x)?)
    }

    /// Most correlated point among the global group and `victim`.
    pub fn select_removal(&self, victim: usize) -> usize {
        argmax_correlation(&self.partition, &self.row_sums, victim)
    }

    /// Incorporates the sample `(x, y)` and forgets one stored point.
    pub fn update(&mut self, x: &[T], y: &[T]) -> Result<UpdateReport<T>> {
        self.check_input(x)?;
        check_dim(self.outputs(), y.len())?;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite measurement".into()));
        }
        let p = self.budget();
        let kernel = self.config.kernel;
        let noise_var = self.config.noise * self.config.noise;

        let mut q_full = Vec::with_capacity(p);
        kernel_vector_into(x, &self.data, &kernel, None, &mut q_full);
        let point_weights = self.inverse.mul_vec(&q_full)?;
        let victim = argmin_local_weight(&self.partition, &point_weights)?;
        let removed = argmax_correlation(&self.partition, &self.row_sums, victim);

        let pivot = self.inverse[(removed, removed)];
        if !(pivot > T::zero()) {
            return Err(Error::Numerical(format!(
                "inverse diagonal {pivot} at removed index {removed} is not positive"
            )));
        }
        // Column `removed` of Σ without its own entry.
        let s: Vec<T> = (0..p).filter(|&i| i != removed).map(|i| self.inverse[(i, removed)]).collect();
        let q_kept: Vec<T> = q_full.iter().enumerate().filter(|&(i, _)| i != removed).map(|(_, &v)| v).collect();
        let src = |i: usize| if i < removed { i } else { i + 1 };

        // Downdate Σ̲ into the top-left block of the next inverse and form
        // ζ = Σ̲ Q(x, X̲) row by row as each row completes.
        let mut next = DenseMatrix::zeros(p, p);
        let mut zeta = vec![T::zero(); p - 1];
        // Products are formed as (a_i a_j)/d so the result stays exactly symmetric.
        let inv_pivot = T::one() / pivot;
        for i in 0..p - 1 {
            let old_row = self.inverse.row(src(i));
            let si = s[i];
            let row = &mut next.row_mut(i)[..p - 1];
            for (j, r) in row.iter_mut().enumerate() {
                *r = old_row[src(j)] - si * s[j] * inv_pivot;
            }
            zeta[i] = dot(row, &q_kept);
        }
        let qxx = kernel.diagonal(x);
        let tau = qxx - dot(&q_kept, &zeta) + noise_var;
        let tau_floor = T::lit(TAU_FLOOR) * qxx;
        if !(tau > tau_floor) {
            return Err(Error::Numerical(format!("Schur complement tau = {tau} at or below {tau_floor}")));
        }
        let inv_tau = T::one() / tau;
        for i in 0..p - 1 {
            let zi = zeta[i];
            let row = next.row_mut(i);
            for j in 0..p - 1 {
                row[j] = row[j] + zi * zeta[j] * inv_tau;
            }
            row[p - 1] = -zi * inv_tau;
        }
        for j in 0..p - 1 {
            next[(p - 1, j)] = -zeta[j] * inv_tau;
        }
        next[(p - 1, p - 1)] = inv_tau;

        // ϑ̲ = ϑ_{¬l} − s ϑ_l / Σ_ll, then border with the new target.
        let n_out = self.outputs();
        let old_w_l = self.weights.row(removed).to_vec();
        let mut w_next = DenseMatrix::zeros(p, n_out);
        for i in 0..p - 1 {
            let si = s[i] / pivot;
            let old = self.weights.row(src(i));
            for (o, dst) in w_next.row_mut(i).iter_mut().enumerate() {
                *dst = old[o] - si * old_w_l[o];
            }
        }
        let mut mu_kept = vec![T::zero(); n_out];
        for i in 0..p - 1 {
            let qi = q_kept[i];
            for (m, w) in mu_kept.iter_mut().zip(w_next.row(i)) {
                *m = *m + *w * qi;
            }
        }
        let innov: Vec<T> = y.iter().zip(&mu_kept).map(|(&yo, &mo)| (yo - mo) * inv_tau).collect();
        for i in 0..p - 1 {
            let zi = zeta[i];
            for (dst, &d) in w_next.row_mut(i).iter_mut().zip(&innov) {
                *dst = *dst - zi * d;
            }
        }
        w_next.row_mut(p - 1).copy_from_slice(&innov);

        // ς: drop the removed point's correlations, add the new point's.
        let removed_point = self.data.row(removed).to_vec();
        let mut rs_next = Vec::with_capacity(p);
        for i in 0..p - 1 {
            let xi = self.data.row(src(i));
            let q_removed = kernel.eval_unchecked(&removed_point, xi);
            rs_next.push(self.row_sums[src(i)] - q_removed + q_kept[i]);
        }
        let last = match self.config.varsigma_rule {
            VarsigmaRule::Corrected => q_kept.iter().copied().sum::<T>() + qxx,
            VarsigmaRule::AsPrinted => q_full.iter().copied().sum::<T>(),
        };
        rs_next.push(last);

        rebuild_dataset(&mut self.data, &mut self.targets, &mut self.partition, victim, removed, x, y)?;
        self.inverse = next;
        self.weights = w_next;
        self.row_sums = rs_next;
        self.step += 1;

        let refresh = self.config.refresh_interval;
        let refreshed = refresh > 0 && self.step.is_multiple_of(refresh as u64);
        if refreshed {
            self.refresh()?;
        } else {
            self.bound = BoundFactor::from_quadratic(
                self.config.rkhs_bound,
                p,
                diag_quadratic(&self.weights, &self.targets),
            );
        }
        Ok(UpdateReport { local_victim: victim, removed, tau, refreshed })
    }

    /// Recomputes `Σ`, `ϑ`, `ς` directly from the current dataset.
    pub fn refresh(&mut self) -> Result<()> {
        let c = &self.config;
        let direct = DirectState::compute(&self.data, &self.targets, &c.kernel, c.noise, c.rkhs_bound)?;
        self.inverse = direct.inverse;
        self.weights = direct.weights;
        self.row_sums = direct.row_sums;
        self.bound = BoundFactor::from_quadratic(c.rkhs_bound, c.budget, diag_quadratic(&self.weights, &self.targets));
        Ok(())
    }

    /// `μ_k(x) = ϑᵀ Q(x, X)`
    pub fn mean(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let kv = kernel_vector(x, &self.data, &self.config.kernel)?;
        self.weights.tr_mul_vec(&kv)
    }

    /// `σ_k(x) = √(q(x,x) − Qᵀ Σ Q)`
    pub fn sigma(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        let kv = kernel_vector(x, &self.data, &self.config.kernel)?;
        let qxx = self.config.kernel.diagonal(x);
        let sq = self.inverse.mul_vec(&kv)?;
        sigma_from_radicand(qxx - dot(&kv, &sq), qxx)
    }

    /// Mean, deviation and bound from the recursive state; no factorization.
    pub fn predict(&self, x: &[T]) -> Result<BoundedEstimate<T>> {
        self.check_input(x)?;
        let kv = kernel_vector(x, &self.data, &self.config.kernel)?;
        let mean = self.weights.tr_mul_vec(&kv)?;
        let qxx = self.config.kernel.diagonal(x);
        let sq = self.inverse.mul_vec(&kv)?;
        let sigma = sigma_from_radicand(qxx - dot(&kv, &sq), qxx)?;
        Ok(BoundedEstimate::new(mean, sigma, self.bound.clone()))
    }

    /// Adds `delta` to `Σ[i][j]` and `Σ[j][i]`. Fault-injection hook for the
    /// verification suites.
    #[doc(hidden)]
    pub fn corrupt_inverse(&mut self, i: usize, j: usize, delta: T) {
        self.inverse[(i, j)] = self.inverse[(i, j)] + delta;
        if i != j {
            self.inverse[(j, i)] = self.inverse[(j, i)] + delta;
        }
    }

    /// Builds the batch model for the current dataset.
    pub fn to_batch(&self) -> Result<BatchModel<T>> {
        let c = &self.config;
        BatchModel::new(self.data.clone(), self.targets.clone(), c.kernel, c.noise, c.rkhs_bound)
    }
}

/// The same dataset policy, with `Ω⁻¹`, `Ω⁻¹Y` and `P1` recomputed from
/// scratch after every update. O(p³) per step; the reference the recursive
/// path is benchmarked and checked against.
#[derive(Debug, Clone)]
pub struct RecomputingModel<T: Scalar> {
    config: ModelConfig<T>,
    data: DenseMatrix<T>,
    targets: DenseMatrix<T>,
    partition: Vec<Partition>,
    state: DirectState<T>,
}

impl<T: Scalar> RecomputingModel<T> {
    pub fn init(x0: &[T], y0: &[T], config: ModelConfig<T>) -> Result<Self> {
        config.validate()?;
        let data = DenseMatrix::repeat_row(config.budget, x0);
        let targets = DenseMatrix::repeat_row(config.budget, y0);
        let partition = initial_partition(config.budget, config.local_budget);
        let state = DirectState::compute(&data, &targets, &config.kernel, config.noise, config.rkhs_bound)?;
        Ok(Self { config, data, targets, partition, state })
    }

    pub fn data(&self) -> &DenseMatrix<T> {
        &self.data
    }

    pub fn targets(&self) -> &DenseMatrix<T> {
        &self.targets
    }

    pub fn partition(&self) -> &[Partition] {
        &self.partition
    }

    pub fn state(&self) -> &DirectState<T> {
        &self.state
    }

    pub fn update(&mut self, x: &[T], y: &[T]) -> Result<(usize, usize)> {
        check_dim(self.data.cols(), x.len())?;
        check_dim(self.targets.cols(), y.len())?;
        let kv = kernel_vector(x, &self.data, &self.config.kernel)?;
        let w = self.state.inverse.mul_vec(&kv)?;
        let victim = argmin_local_weight(&self.partition, &w)?;
        let removed = argmax_correlation(&self.partition, &self.state.row_sums, victim);
        rebuild_dataset(&mut self.data, &mut self.targets, &mut self.partition, victim, removed, x, y)?;
        let c = &self.config;
        self.state = DirectState::compute(&self.data, &self.targets, &c.kernel, c.noise, c.rkhs_bound)?;
        Ok((victim, removed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_estimate_uses_kernel_diagonal() {
        let mut cfg = config(100, 50);
        cfg.rkhs_bound = 100.0;
        cfg.kernel = KernelParams { scale: 100.0, bandwidth: 0.5 };
        let e = cfg.prior_estimate(&[0.3, -0.2], 2);
        assert_eq!(e.mean, vec![0.0, 0.0]);
        assert_eq!(e.sigma, 10.0);
        assert_eq!(e.phi[0], e.phi[1]);
        assert!((e.phi[0] - 1_004.987_562_112_089).abs() < 1e-9);
    }

    fn config(p: usize, pl: usize) -> ModelConfig<f64> {
        ModelConfig {
            budget: p,
            local_budget: pl,
            noise: 0.5,
            rkhs_bound: 10.0,
            kernel: KernelParams { scale: 2.0, bandwidth: 0.5 },
            sample_period: 1e-3,
            blend_rate: 10.0,
            refresh_interval: 0,
            varsigma_rule: VarsigmaRule::Corrected,
        }
    }

    fn rel_err(a: &DenseMatrix<f64>, b: &DenseMatrix<f64>) -> f64 {
        a.max_abs_diff(b) / b.max_abs().max(1e-300)
    }

    #[test]
    fn config_validation() {
        let mut c = config(4, 2);
        assert!(c.validate().is_ok());
        c.local_budget = 4;
        assert!(c.validate().is_err());
        c.local_budget = 0;
        assert!(c.validate().is_err());
        let mut c = config(4, 2);
        c.blend_rate = 0.5;
        assert!(c.validate().is_err());
        let mut c = config(4, 2);
        c.sample_period = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn init_two_point_closed_form() {
        let c = config(2, 1);
        let m = StreamingModel::init(&[0.3, 0.1], &[1.0], c.clone()).unwrap();
        // Ω = s·11ᵀ + ρ²I; its inverse is (1/ρ²)(I − s/(ρ² + 2s) 11ᵀ).
        let (s, r2) = (2.0, 0.25);
        let off = -s / (r2 * (r2 + 2.0 * s));
        let diag = 1.0 / r2 + off;
        let expected = DenseMatrix::from_rows(&[[diag, off], [off, diag]]).unwrap();
        assert!(rel_err(m.inverse(), &expected) < 1e-13);
        assert_eq!(m.row_sums(), &[4.0, 4.0]);
        assert_eq!(m.partition(), &[Partition::Global, Partition::Local]);
    }

    #[test]
    fn identical_rows_tie_break_to_lowest_index() {
        let m = StreamingModel::init(&[0.0, 0.0], &[0.0], config(6, 3)).unwrap();
        assert_eq!(m.select_local_victim(&[0.0, 0.0]).unwrap(), 3);
        assert_eq!(m.select_removal(3), 0);
    }

    #[test]
    fn hand_built_selection_matches_scan() {
        let data = DenseMatrix::from_rows(&[[0.0, 0.0], [0.1, 0.0], [3.0, 3.0], [0.05, 0.02]]).unwrap();
        let targets = DenseMatrix::from_rows(&[[1.0], [2.0], [0.5], [1.5]]).unwrap();
        let partition = vec![Partition::Global, Partition::Local, Partition::Local, Partition::Global];
        let m = StreamingModel::from_dataset(data.clone(), targets, partition.clone(), config(4, 2)).unwrap();
        let x = [2.0, 2.5];
        let w = m.point_weights(&x).unwrap();
        // Exhaustive scan over the local indices {1, 2}.
        let expect_j = if w[1].abs() <= w[2].abs() { 1 } else { 2 };
        let j = m.select_local_victim(&x).unwrap();
        assert_eq!(j, expect_j);
        let p = gram_matrix(&data, &KernelParams { scale: 2.0, bandwidth: 0.5 });
        let sums: Vec<f64> = p.row_iter().map(|r| r.iter().sum()).collect();
        let mut best = j;
        for &i in &[0usize, 3] {
            if sums[i] > sums[best] || (sums[i] == sums[best] && i < best) {
                best = i;
            }
        }
        assert_eq!(m.select_removal(j), best);
    }

    #[test]
    fn clustered_global_point_is_removed() {
        // Global 0 sits inside a cluster, global 1 is isolated.
        let data = DenseMatrix::from_rows(&[[0.0, 0.0], [9.0, 9.0], [0.1, 0.0], [0.0, 0.1]]).unwrap();
        let targets = DenseMatrix::repeat_row(4, &[0.0]);
        let partition = vec![Partition::Global, Partition::Global, Partition::Local, Partition::Local];
        let m = StreamingModel::from_dataset(data, targets, partition, config(4, 2)).unwrap();
        assert_eq!(m.select_removal(2), 0);
    }

    #[test]
    fn single_update_matches_batch_inverse() {
        let mut m = StreamingModel::init(&[0.0, 0.0], &[0.7], config(5, 2)).unwrap();
        let r = m.update(&[0.4, -0.2], &[1.1]).unwrap();
        assert!(r.tau > 0.0);
        let omega = crate::kernel::regularized_gram(m.data(), &m.config().kernel, 0.5);
        let id = m.inverse().mul_mat(&omega).unwrap();
        assert!(id.max_abs_diff(&DenseMatrix::identity(5)) < 1e-6);
        assert_eq!(m.inverse().asymmetry(), 0.0);
    }

    #[test]
    fn budget_and_newest_point_bookkeeping() {
        let mut m = StreamingModel::init(&[0.0], &[0.0], config(6, 2)).unwrap();
        for k in 0..40 {
            let x = [(k as f64 * 0.37).sin() * 2.0];
            m.update(&x, &[x[0].cos()]).unwrap();
            assert_eq!(m.data().rows(), 6);
            assert_eq!(m.partition().iter().filter(|&&p| p == Partition::Local).count(), 2);
            assert_eq!(*m.partition().last().unwrap(), Partition::Local);
            assert_eq!(m.data().row(5), &x);
        }
    }

    #[test]
    fn reinserting_removed_point_preserves_set() {
        let data = DenseMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let targets = DenseMatrix::from_rows(&[[0.0], [1.0], [4.0], [9.0]]).unwrap();
        let part = vec![Partition::Global, Partition::Global, Partition::Local, Partition::Local];
        let mut m = StreamingModel::from_dataset(data.clone(), targets.clone(), part, config(4, 2)).unwrap();
        let j = m.select_local_victim(&[1.5]).unwrap();
        let l = m.select_removal(j);
        let (xl, yl) = (data.row(l).to_vec(), targets.row(l).to_vec());
        m.update(&xl, &yl).unwrap();
        let mut before: Vec<f64> = data.as_slice().to_vec();
        let mut after: Vec<f64> = m.data().as_slice().to_vec();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        assert_eq!(before, after);
    }

    #[test]
    fn printed_varsigma_form_drifts() {
        let mut c = config(5, 2);
        c.varsigma_rule = VarsigmaRule::AsPrinted;
        let mut m = StreamingModel::init(&[0.0, 0.0], &[0.0], c).unwrap();
        m.update(&[1.0, 0.5], &[0.2]).unwrap();
        m.update(&[1.3, 0.1], &[0.1]).unwrap();
        let direct = row_sums(&gram_matrix(m.data(), &m.config().kernel));
        let worst = direct.iter().zip(m.row_sums()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst > 1e-3, "printed recursion unexpectedly exact: {worst}");
    }

    #[test]
    fn refresh_interval_recomputes() {
        let mut c = config(5, 2);
        c.refresh_interval = 3;
        let mut m = StreamingModel::init(&[0.0], &[0.0], c).unwrap();
        let flags: Vec<bool> = (0..6).map(|k| m.update(&[k as f64 * 0.3], &[1.0]).unwrap().refreshed).collect();
        assert_eq!(flags, vec![false, false, true, false, false, true]);
    }

    #[test]
    fn errors_on_bad_inputs() {
        let mut m = StreamingModel::init(&[0.0, 0.0], &[0.0], config(4, 2)).unwrap();
        assert!(matches!(m.update(&[0.0], &[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(m.update(&[0.0, 0.0], &[f64::NAN]), Err(Error::Numerical(_))));
        assert!(m.predict(&[0.0]).is_err());
    }

    #[test]
    fn corrupted_inverse_pivot_is_detected() {
        let mut m = StreamingModel::init(&[0.0], &[0.0], config(4, 2)).unwrap();
        for l in 0..4 {
            let d = m.inverse()[(l, l)];
            m.corrupt_inverse(l, l, -2.0 * d);
        }
        assert!(matches!(m.update(&[0.5], &[0.0]), Err(Error::Numerical(_))));
    }

    #[test]
    fn zero_targets_prediction() {
        let m = StreamingModel::init(&[1.0, 2.0], &[0.0, 0.0], config(4, 2)).unwrap();
        let e = m.predict(&[0.0, 0.0]).unwrap();
        assert_eq!(e.mean, vec![0.0, 0.0]);
        assert_eq!(e.bound_factor, vec![(100.0f64 + 4.0).sqrt(); 2]);
    }

    #[test]
    fn recomputing_model_tracks_recursive_choices() {
        let c = config(8, 4);
        let mut fast = StreamingModel::init(&[0.0, 0.0], &[0.0], c.clone()).unwrap();
        let mut slow = RecomputingModel::init(&[0.0, 0.0], &[0.0], c).unwrap();
        for k in 0..60 {
            let t = k as f64 * 0.21;
            let x = [t.sin(), (0.7 * t).cos()];
            let y = [x[0] * x[1]];
            let r = fast.update(&x, &y).unwrap();
            let (j, l) = slow.update(&x, &y).unwrap();
            assert_eq!((r.local_victim, r.removed), (j, l), "diverged at step {k}");
        }
        assert!(rel_err(fast.inverse(), &slow.state().inverse) < 1e-8);
    }
}
