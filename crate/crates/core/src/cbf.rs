//! Robust control-barrier-function constraint and its closed-form
//! minimum-intervention filter, plus the barrier compositions used to build
//! a single constraint from several (high-relative-degree lifting, softmin).

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, Cholesky, DenseMatrix};
use crate::scalar::Scalar;

/// Floor on `ε` below which the filter is degenerate.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Nominal control-affine dynamics `ẋ = f(x) + g(x)u`.
pub trait ControlAffine<T: Scalar> {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// `f(x)`
    fn drift(&self, x: &[T]) -> Vec<T>;
    /// `g(x)`, `state_dim × input_dim`.
    fn input_matrix(&self, x: &[T]) -> DenseMatrix<T>;
}

/// Drift with an analytic Jacobian `∂f/∂x`.
pub trait DriftJacobian<T: Scalar>: ControlAffine<T> {
    fn drift_jacobian(&self, x: &[T]) -> DenseMatrix<T>;
}

/// A scalar barrier with its gradient.
pub trait Barrier<T: Scalar> {
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
}

/// A barrier with an analytic Hessian, needed to lift it once more.
pub trait CurvedBarrier<T: Scalar>: Barrier<T> {
    fn hessian(&self, x: &[T]) -> DenseMatrix<T>;
}

impl<T: Scalar, B: Barrier<T> + ?Sized> Barrier<T> for Box<B> {
    fn value(&self, x: &[T]) -> T {
        (**self).value(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        (**self).gradient(x)
    }
}

impl<T: Scalar, B: Barrier<T> + ?Sized> Barrier<T> for &B {
    fn value(&self, x: &[T]) -> T {
        (**self).value(x)
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        (**self).gradient(x)
    }
}

impl<T: Scalar, B: CurvedBarrier<T> + ?Sized> CurvedBarrier<T> for Box<B> {
    fn hessian(&self, x: &[T]) -> DenseMatrix<T> {
        (**self).hessian(x)
    }
}

/// Class-K function used in the barrier conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassK<T> {
    /// `α(s) = gain · s`
    Linear(T),
}

impl<T: Scalar> ClassK<T> {
    pub fn eval(&self, s: T) -> T {
        match *self {
            ClassK::Linear(g) => g * s,
        }
    }

    pub fn derivative(&self, _s: T) -> T {
        match *self {
            ClassK::Linear(g) => g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ClassK::Linear(g) if g > T::zero() && g.is_finite() => Ok(()),
            ClassK::Linear(g) => Err(Error::InvalidConfig(format!("class-K gain must be positive, got {g}"))),
        }
    }
}

/// `a·x + c`
#[derive(Debug, Clone, PartialEq)]
pub struct AffineBarrier<T> {
    pub coefficients: Vec<T>,
    pub offset: T,
}

impl<T: Scalar> Barrier<T> for AffineBarrier<T> {
    fn value(&self, x: &[T]) -> T {
        dot(&self.coefficients, x) + self.offset
    }
    fn gradient(&self, _x: &[T]) -> Vec<T> {
        self.coefficients.clone()
    }
}

impl<T: Scalar> CurvedBarrier<T> for AffineBarrier<T> {
    fn hessian(&self, _x: &[T]) -> DenseMatrix<T> {
        let n = self.coefficients.len();
        DenseMatrix::zeros(n, n)
    }
}

/// `ψ_{d−1}` together with the outer class-K function of the robust constraint.
#[derive(Debug, Clone)]
pub struct BarrierSpec<B, T> {
    pub barrier: B,
    pub alpha: ClassK<T>,
}

/// Quadratic weight `H` and slack weight `β` of the filter cost.
#[derive(Debug, Clone)]
pub struct FilterParams<T: Scalar> {
    weight: DenseMatrix<T>,
    weight_inverse: DenseMatrix<T>,
    beta: T,
}

impl<T: Scalar> FilterParams<T> {
    pub fn new(weight: DenseMatrix<T>, beta: T) -> Result<Self> {
        if !weight.is_square() {
            return Err(Error::DimensionMismatch { expected: weight.rows(), found: weight.cols() });
        }
        if !(beta > T::zero() && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!("slack weight must be positive, got {beta}")));
        }
        if weight.asymmetry() > T::lit(1e-12) * weight.max_abs() {
            return Err(Error::InvalidConfig("filter weight must be symmetric".into()));
        }
        let weight_inverse = Cholesky::factor(&weight)
            .map_err(|_| Error::InvalidConfig("filter weight must be positive definite".into()))?
            .inverse();
        Ok(Self { weight, weight_inverse, beta })
    }

    /// `H = h·I_m`
    pub fn scaled_identity(m: usize, h: T, beta: T) -> Result<Self> {
        let mut w = DenseMatrix::zeros(m, m);
        w.add_diagonal(h);
        Self::new(w, beta)
    }

    pub fn weight(&self) -> &DenseMatrix<T> {
        &self.weight
    }

    pub fn weight_inverse(&self) -> &DenseMatrix<T> {
        &self.weight_inverse
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `½(u − u_d)ᵀH(u − u_d) + (β/2)δ²`
    pub fn cost(&self, u: &[T], u_d: &[T], delta: T) -> T {
        let du: Vec<T> = u.iter().zip(u_d).map(|(&a, &b)| a - b).collect();
        let hdu = self.weight.mul_vec(&du).expect("dimension checked by caller");
        let half = T::lit(0.5);
        half * dot(&du, &hdu) + half * self.beta * delta * delta
    }
}

/// Lie derivatives of `ψ_{d−1}` at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintTerms<T> {
    /// `ψ_{d−1}(x)`
    pub value: T,
    /// `∂ψ_{d−1}/∂x`
    pub gradient: Vec<T>,
    /// `L_f ψ_{d−1}`
    pub lie_drift: T,
    /// `L_g ψ_{d−1}`, one entry per input.
    pub lie_input: Vec<T>,
    /// `α(ψ_{d−1})`
    pub alpha_value: T,
}

impl<T: Scalar> ConstraintTerms<T> {
    pub fn compute<B, D>(x: &[T], spec: &BarrierSpec<B, T>, dynamics: &D) -> Result<Self>
    where
        B: Barrier<T>,
        D: ControlAffine<T> + ?Sized,
    {
        check_dim(dynamics.state_dim(), x.len())?;
        let value = spec.barrier.value(x);
        let gradient = spec.barrier.gradient(x);
        check_dim(x.len(), gradient.len())?;
        let f = dynamics.drift(x);
        let g = dynamics.input_matrix(x);
        check_dim(x.len(), g.rows())?;
        check_dim(dynamics.input_dim(), g.cols())?;
        let lie_drift = dot(&gradient, &f);
        let lie_input = g.tr_mul_vec(&gradient)?;
        Ok(Self { value, gradient, lie_drift, lie_input, alpha_value: spec.alpha.eval(value) })
    }

    /// `ψ(x, μ̂, φ̂, û, δ̂)`, the robust constraint function.
    pub fn psi(&self, mu_hat: &[T], phi_hat: &[T], u_hat: &[T], delta_hat: T) -> Result<T> {
        check_dim(self.gradient.len(), mu_hat.len())?;
        check_dim(self.gradient.len(), phi_hat.len())?;
        check_dim(self.lie_input.len(), u_hat.len())?;
        let mean_term = dot(&self.gradient, mu_hat);
        let bound_term: T = self.gradient.iter().zip(phi_hat).map(|(&g, &p)| g.abs() * p).sum();
        Ok(self.lie_drift + dot(&self.lie_input, u_hat) + delta_hat * self.value + mean_term - bound_term
            + self.alpha_value)
    }
}

/// `ψ(x, μ̂, φ̂, û, δ̂)` evaluated from scratch.
#[allow(clippy::too_many_arguments)]
pub fn constraint_psi<T, B, D>(
    x: &[T],
    mu_hat: &[T],
    phi_hat: &[T],
    u_hat: &[T],
    delta_hat: T,
    spec: &BarrierSpec<B, T>,
    dynamics: &D,
) -> Result<T>
where
    T: Scalar,
    B: Barrier<T>,
    D: ControlAffine<T> + ?Sized,
{
    ConstraintTerms::compute(x, spec, dynamics)?.psi(mu_hat, phi_hat, u_hat, delta_hat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult<T> {
    pub u_star: Vec<T>,
    pub delta_star: T,
    pub lambda_star: T,
    /// `ψ` at `(u_d, 0)`
    pub omega: T,
    pub epsilon: T,
    pub constraint_active: bool,
    /// `ψ` at `(u*, δ*)`
    pub psi_star: T,
    /// `ψ_{d−1}(x)`
    pub barrier_value: T,
}

/// Closed-form minimizer of the slack-augmented cost subject to `ψ ≥ 0`.
pub fn filter_terms<T: Scalar>(
    terms: &ConstraintTerms<T>,
    mu: &[T],
    phi: &[T],
    u_d: &[T],
    params: &FilterParams<T>,
) -> Result<FilterResult<T>> {
    check_dim(params.weight.rows(), u_d.len())?;
    let omega = terms.psi(mu, phi, u_d, T::zero())?;
    let h_inv_lg = params.weight_inverse.mul_vec(&terms.lie_input)?;
    let epsilon = dot(&terms.lie_input, &h_inv_lg) + terms.value * terms.value / params.beta;
    if !(epsilon > T::lit(EPSILON_FLOOR)) {
        return Err(Error::DegenerateFilter { epsilon: epsilon.to_f64().unwrap_or(f64::NAN) });
    }
    let constraint_active = omega < T::zero();
    let lambda_star = if constraint_active { -omega / epsilon } else { T::zero() };
    let u_star: Vec<T> = u_d.iter().zip(&h_inv_lg).map(|(&u, &k)| u + lambda_star * k).collect();
    let delta_star = lambda_star * terms.value / params.beta;
    let psi_star = terms.psi(mu, phi, &u_star, delta_star)?;
    Ok(FilterResult {
        u_star,
        delta_star,
        lambda_star,
        omega,
        epsilon,
        constraint_active,
        psi_star,
        barrier_value: terms.value,
    })
}

/// Evaluates the constraint at `x` and filters `u_d`.
pub fn filter<T, B, D>(
    x: &[T],
    mu: &[T],
    phi: &[T],
    u_d: &[T],
    spec: &BarrierSpec<B, T>,
    params: &FilterParams<T>,
    dynamics: &D,
) -> Result<FilterResult<T>>
where
    T: Scalar,
    B: Barrier<T>,
    D: ControlAffine<T> + ?Sized,
{
    if phi.iter().any(|&p| !(p >= T::zero())) {
        return Err(Error::InvalidConfig("error bound must be nonnegative".into()));
    }
    let terms = ConstraintTerms::compute(x, spec, dynamics)?;
    filter_terms(&terms, mu, phi, u_d, params)
}

/// `φ₁(x) = ∇φ₀(x)·f(x) + α₀(φ₀(x))`: one step of high-order lifting along the nominal drift.
#[derive(Debug, Clone)]
pub struct HocbfLift<B, D, T> {
    pub base: B,
    pub dynamics: D,
    pub alpha: ClassK<T>,
}

impl<T, B, D> Barrier<T> for HocbfLift<B, D, T>
where
    T: Scalar,
    B: CurvedBarrier<T>,
    D: DriftJacobian<T>,
{
    fn value(&self, x: &[T]) -> T {
        let grad = self.base.gradient(x);
        dot(&grad, &self.dynamics.drift(x)) + self.alpha.eval(self.base.value(x))
    }

    /// `∇²φ₀ f + (∂f/∂x)ᵀ∇φ₀ + α₀'(φ₀)∇φ₀`
    fn gradient(&self, x: &[T]) -> Vec<T> {
        let grad = self.base.gradient(x);
        let f = self.dynamics.drift(x);
        let hess = self.base.hessian(x);
        let jac = self.dynamics.drift_jacobian(x);
        let da = self.alpha.derivative(self.base.value(x));
        let hf = hess.mul_vec(&f).expect("Hessian matches state dimension");
        let jg = jac.tr_mul_vec(&grad).expect("Jacobian matches state dimension");
        hf.iter().zip(&jg).zip(&grad).map(|((&a, &b), &g)| a + b + da * g).collect()
    }
}

/// `−(1/ϱ) log Σ e^{−ϱ z_i}`, shifted by the minimum for stability.
pub fn softmin<T: Scalar>(values: &[T], rho: T) -> Result<T> {
    let (min, sum) = softmin_parts(values, rho)?;
    Ok(min - sum.ln() / rho)
}

/// `(min z, Σ e^{−ϱ(z_i − min)})`
fn softmin_parts<T: Scalar>(values: &[T], rho: T) -> Result<(T, T)> {
    if values.is_empty() {
        return Err(Error::Empty("softmin needs at least one value"));
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidConfig(format!("softmin sharpness must be positive, got {rho}")));
    }
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let sum = values.iter().map(|&z| (-rho * (z - min)).exp()).sum();
    Ok((min, sum))
}

/// Softmax weights `e^{−ϱ(z_i − min)} / Σ_j e^{−ϱ(z_j − min)}`.
pub fn softmin_weights<T: Scalar>(values: &[T], rho: T) -> Result<Vec<T>> {
    let (min, sum) = softmin_parts(values, rho)?;
    Ok(values.iter().map(|&z| (-rho * (z - min)).exp() / sum).collect())
}

/// `Σ w_i ∇z_i` with the softmax weights of `values`.
pub fn softmin_gradient<T: Scalar>(values: &[T], gradients: &[Vec<T>], rho: T) -> Result<Vec<T>> {
    check_dim(values.len(), gradients.len())?;
    let weights = softmin_weights(values, rho)?;
    let n = gradients[0].len();
    let mut out = vec![T::zero(); n];
    for (w, g) in weights.iter().zip(gradients) {
        check_dim(n, g.len())?;
        for (o, &gi) in out.iter_mut().zip(g) {
            *o = *o + *w * gi;
        }
    }
    Ok(out)
}

/// Softmin of a stack of barriers.
#[derive(Debug, Clone)]
pub struct SoftMin<B, T> {
    pub parts: Vec<B>,
    pub rho: T,
}

impl<B, T: Scalar> SoftMin<B, T> {
    pub fn new(parts: Vec<B>, rho: T) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Empty("softmin needs at least one barrier"));
        }
        if !(rho > T::zero() && rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("softmin sharpness must be positive, got {rho}")));
        }
        Ok(Self { parts, rho })
    }
}

impl<B: Barrier<T>, T: Scalar> SoftMin<B, T> {
    pub fn part_values(&self, x: &[T]) -> Vec<T> {
        self.parts.iter().map(|b| b.value(x)).collect()
    }
}

impl<B: Barrier<T>, T: Scalar> Barrier<T> for SoftMin<B, T> {
    fn value(&self, x: &[T]) -> T {
        softmin(&self.part_values(x), self.rho).expect("validated at construction")
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let grads: Vec<Vec<T>> = self.parts.iter().map(|b| b.gradient(x)).collect();
        softmin_gradient(&self.part_values(x), &grads, self.rho).expect("validated at construction")
    }
}

impl<B: CurvedBarrier<T>, T: Scalar> CurvedBarrier<T> for SoftMin<B, T> {
    /// `Σ w_i ∇²z_i − ϱ(Σ w_i ∇z_i ∇z_iᵀ − ḡḡᵀ)`
    fn hessian(&self, x: &[T]) -> DenseMatrix<T> {
        let n = x.len();
        let weights = softmin_weights(&self.part_values(x), self.rho).expect("validated at construction");
        let grads: Vec<Vec<T>> = self.parts.iter().map(|b| b.gradient(x)).collect();
        let mut mean = vec![T::zero(); n];
        for (w, g) in weights.iter().zip(&grads) {
            for (m, &gi) in mean.iter_mut().zip(g) {
                *m = *m + *w * gi;
            }
        }
        let mut out = DenseMatrix::zeros(n, n);
        for ((w, g), b) in weights.iter().zip(&grads).zip(&self.parts) {
            let h = b.hessian(x);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + *w * (h[(i, j)] - self.rho * g[i] * g[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + self.rho * mean[i] * mean[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Integrator;

    impl ControlAffine<f64> for Integrator {
        fn state_dim(&self) -> usize {
            1
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn drift(&self, _x: &[f64]) -> Vec<f64> {
            vec![0.0]
        }
        fn input_matrix(&self, _x: &[f64]) -> DenseMatrix<f64> {
            DenseMatrix::identity(1)
        }
    }

    struct Parabola;

    impl Barrier<f64> for Parabola {
        fn value(&self, x: &[f64]) -> f64 {
            1.0 - x[0] * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![-2.0 * x[0]]
        }
    }

    fn spec() -> BarrierSpec<Parabola, f64> {
        BarrierSpec { barrier: Parabola, alpha: ClassK::Linear(1.0) }
    }

    #[test]
    fn hand_evaluated_constraint() {
        let v = constraint_psi(&[0.0], &[0.0], &[0.0], &[0.0], 0.0, &spec(), &Integrator).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn inactive_filter_passes_through() {
        let params = FilterParams::scaled_identity(1, 2.0, 200.0).unwrap();
        let r = filter(&[0.5], &[0.0], &[0.0], &[0.3], &spec(), &params, &Integrator).unwrap();
        assert!(r.omega >= 0.0);
        assert_eq!(r.u_star, vec![0.3]);
        assert_eq!((r.delta_star, r.lambda_star), (0.0, 0.0));
        assert!(!r.constraint_active);
    }

    #[test]
    fn hand_solved_active_filter() {
        // ψ_{d−1}(x) = 0 at x = 1, L_gψ = −2; pick u_d so that ω = −1.
        let params = FilterParams::scaled_identity(1, 1.0, 1.0).unwrap();
        // ω = −2u_d + α(0) = −1 → u_d = 0.5; ε = 4; λ = 1/4; u* = 0.5 + (1/4)(−2) = 0.
        let r = filter(&[1.0], &[0.0], &[0.0], &[0.5], &spec(), &params, &Integrator).unwrap();
        assert!((r.omega + 1.0).abs() < 1e-15);
        assert!((r.epsilon - 4.0).abs() < 1e-15);
        assert!((r.lambda_star - 0.25).abs() < 1e-15);
        assert!(r.u_star[0].abs() < 1e-15);
        assert_eq!(r.delta_star, 0.0);
        assert!(r.psi_star.abs() < 1e-12);
    }

    #[test]
    fn unit_gain_slack_free_instance() {
        let terms = ConstraintTerms {
            value: 0.0,
            gradient: vec![1.0],
            lie_drift: -1.0,
            lie_input: vec![1.0],
            alpha_value: 0.0,
        };
        let params = FilterParams::scaled_identity(1, 1.0, 1.0).unwrap();
        let r = filter_terms(&terms, &[0.0], &[0.0], &[0.0], &params).unwrap();
        assert_eq!((r.epsilon, r.lambda_star, r.u_star[0], r.delta_star), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn degenerate_filter_is_an_error() {
        let params = FilterParams::scaled_identity(1, 1.0, 1.0).unwrap();
        // x = 1: ψ_{d−1} = 0 and a zero input gain.
        struct NoInput;
        impl ControlAffine<f64> for NoInput {
            fn state_dim(&self) -> usize {
                1
            }
            fn input_dim(&self) -> usize {
                1
            }
            fn drift(&self, _x: &[f64]) -> Vec<f64> {
                vec![0.0]
            }
            fn input_matrix(&self, _x: &[f64]) -> DenseMatrix<f64> {
                DenseMatrix::zeros(1, 1)
            }
        }
        let r = filter(&[1.0], &[0.0], &[0.0], &[0.0], &spec(), &params, &NoInput);
        assert!(matches!(r, Err(Error::DegenerateFilter { .. })));
    }

    #[test]
    fn filter_params_validation() {
        assert!(FilterParams::scaled_identity(2, 1.0, 0.0).is_err());
        assert!(FilterParams::scaled_identity(2, -1.0, 1.0).is_err());
        let asym = DenseMatrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(FilterParams::new(asym, 1.0).is_err());
        let p = FilterParams::scaled_identity(2, 2.0f64, 2.0).unwrap();
        assert!((p.weight_inverse()[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p.cost(&[1.0, 1.0], &[0.0, 0.0], 1.0), 3.0);
    }

    #[test]
    fn softmin_closed_forms() {
        assert_eq!(softmin(&[3.5], 20.0).unwrap(), 3.5);
        let v = softmin(&[2.0; 4], 20.0).unwrap();
        assert!((v - (2.0 - 4f64.ln() / 20.0)).abs() < 1e-15);
        assert!(softmin(&[0.0f64, 100.0], 20.0).unwrap().abs() < 1e-8);
        assert!(softmin::<f64>(&[], 20.0).is_err());
        assert!(softmin(&[1.0], 0.0).is_err());
        // No overflow for large spreads.
        assert!(softmin(&[-500.0f64, 500.0], 20.0).unwrap().is_finite());
    }

    #[test]
    fn softmin_gradient_trivial_cases() {
        let g = softmin_gradient(&[1.0], &[vec![0.3, -0.2]], 20.0).unwrap();
        assert_eq!(g, vec![0.3, -0.2]);
        let g = softmin_gradient(&[1.0f64, 1.0], &[vec![0.5, 2.0], vec![0.5, 2.0]], 20.0).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 2.0).abs() < 1e-15);
        assert!(softmin_gradient(&[1.0, 1.0], &[vec![0.5]], 20.0).is_err());
    }

    #[test]
    fn class_k_validation() {
        assert!(ClassK::Linear(2.0).validate().is_ok());
        assert!(ClassK::Linear(0.0).validate().is_err());
        assert_eq!(ClassK::Linear(20.0).eval(0.0), 0.0);
    }
}
