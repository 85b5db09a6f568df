//! C¹ time blending between successive model snapshots.

use crate::error::{Error, Result};
use crate::gp_batch::{BatchModel, BoundedEstimate};
use crate::gp_stream::StreamingModel;
use crate::scalar::Scalar;

/// Anything that yields a mean and an error bound at a state.
pub trait Estimator<T: Scalar> {
    fn estimate(&self, x: &[T]) -> Result<BoundedEstimate<T>>;
}

impl<T: Scalar> Estimator<T> for StreamingModel<T> {
    fn estimate(&self, x: &[T]) -> Result<BoundedEstimate<T>> {
        self.predict(x)
    }
}

impl<T: Scalar> Estimator<T> for BatchModel<T> {
    fn estimate(&self, x: &[T]) -> Result<BoundedEstimate<T>> {
        self.predict(x)
    }
}

/// `ξ(t)`: 0 before 0, `ηt − sin(2πηt)/2π` on `[0, 1/η]`, 1 after.
pub fn xi<T: Scalar>(t: T, eta: T) -> T {
    if t <= T::zero() {
        return T::zero();
    }
    let s = eta * t;
    if s >= T::one() {
        return T::one();
    }
    let two_pi = T::lit(std::f64::consts::TAU);
    s - (two_pi * s).sin() / two_pi
}

/// `ξ'(t)`, zero outside `(0, 1/η)`.
pub fn xi_derivative<T: Scalar>(t: T, eta: T) -> T {
    let s = eta * t;
    if s <= T::zero() || s >= T::one() {
        return T::zero();
    }
    eta * (T::one() - (T::lit(std::f64::consts::TAU) * s).cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlendSchedule<T> {
    pub eta: T,
    pub sample_period: T,
}

impl<T: Scalar> BlendSchedule<T> {
    pub fn new(eta: T, sample_period: T) -> Result<Self> {
        if !(eta >= T::one() && eta.is_finite()) {
            return Err(Error::InvalidConfig(format!("blend rate must be at least 1, got {eta}")));
        }
        if !(sample_period > T::zero() && sample_period.is_finite()) {
            return Err(Error::InvalidConfig(format!("sample period must be positive, got {sample_period}")));
        }
        Ok(Self { eta, sample_period })
    }

    /// `ξ((t − t_k)/T_s)`
    pub fn weight(&self, t: T, t_k: T) -> T {
        xi((t - t_k) / self.sample_period, self.eta)
    }
}

/// The estimate seen by the controller on `[t_k, t_k + T_s)`.
#[derive(Debug, Clone)]
pub struct BlendedModel<T: Scalar, M> {
    previous: M,
    current: M,
    t_k: T,
    schedule: BlendSchedule<T>,
}

impl<T: Scalar, M: Estimator<T> + Clone> BlendedModel<T, M> {
    /// Step-0 state: both snapshots are the first model.
    pub fn new(first: M, t0: T, schedule: BlendSchedule<T>) -> Self {
        Self { previous: first.clone(), current: first, t_k: t0, schedule }
    }

    /// `previous ← current`, `current ← next`, new window starting at `t_k`.
    pub fn swap(&mut self, next: M, t_k: T) {
        self.previous = std::mem::replace(&mut self.current, next);
        self.t_k = t_k;
    }

    pub fn previous(&self) -> &M {
        &self.previous
    }

    pub fn current(&self) -> &M {
        &self.current
    }

    pub fn activation_time(&self) -> T {
        self.t_k
    }

    pub fn schedule(&self) -> &BlendSchedule<T> {
        &self.schedule
    }

    fn weight_in_window(&self, t: T) -> Result<T> {
        let end = self.t_k + self.schedule.sample_period;
        if !(t >= self.t_k && t < end) {
            return Err(Error::OutsideWindow {
                t: t.to_f64().unwrap_or(f64::NAN),
                start: self.t_k.to_f64().unwrap_or(f64::NAN),
                end: end.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.schedule.weight(t, self.t_k))
    }

    /// Blended `(μ, φ)` at time `t` and state `x`.
    pub fn blended(&self, t: T, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let w = self.weight_in_window(t)?;
        let cur = self.current.estimate(x)?;
        if w == T::one() {
            return Ok((cur.mean, cur.phi));
        }
        let prev = self.previous.estimate(x)?;
        if w == T::zero() {
            return Ok((prev.mean, prev.phi));
        }
        Ok((mix(w, &cur.mean, &prev.mean), mix(w, &cur.phi, &prev.phi)))
    }

    pub fn blended_mean(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        Ok(self.blended(t, x)?.0)
    }

    pub fn blended_phi(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        Ok(self.blended(t, x)?.1)
    }
}

fn mix<T: Scalar>(w: T, cur: &[T], prev: &[T]) -> Vec<T> {
    cur.iter().zip(prev).map(|(&c, &p)| w * c + (T::one() - w) * p).collect()
}
