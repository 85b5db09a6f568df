//! Inverted pendulum with restitution and friction uncertainty, kept within
//! `|γ| ≤ π/4` while tracking a sinusoidal reference.

use std::f64::consts::{FRAC_PI_4, PI};

use safegp_core::{Barrier, ClassK, ControlAffine, DenseMatrix, FilterParams, ModelConfig};

use crate::config::{PendulumConfig, SyntheticConfig};
use crate::scenario::{columns, Figure, Scenario, ScenarioKind};
use crate::synthetic::KernelExpansion;
use crate::SimError;

/// Known part: `f = [γ̇, (a_g/L) sin γ]`, `g = [0, 1/(mL²)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumDynamics {
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
}

impl PendulumDynamics {
    pub fn inertia(&self) -> f64 {
        self.mass * self.length * self.length
    }

    /// `(a_g/L) sin γ`
    pub fn f2(&self, gamma: f64) -> f64 {
        self.gravity / self.length * gamma.sin()
    }
}

impl ControlAffine<f64> for PendulumDynamics {
    fn state_dim(&self) -> usize {
        2
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn drift(&self, x: &[f64]) -> Vec<f64> {
        vec![x[1], self.f2(x[0])]
    }
    fn input_matrix(&self, _x: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::from_row_slice(2, 1, &[0.0, 1.0 / self.inertia()]).expect("2x1")
    }
}

/// Restitution, Coulomb, viscous and drag terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionModel {
    pub k: [f64; 5],
    pub eps1: f64,
    pub eps2: f64,
    pub inertia: f64,
}

impl FrictionModel {
    /// `w₂ = (1/mL²)(−k₁γ − k₂γ³ − k₃ tanh(γ̇/ε₁) − k₄γ̇ − k₅γ̇² tanh(γ̇/ε₂))`
    pub fn w2(&self, x: &[f64]) -> f64 {
        let (g, gd) = (x[0], x[1]);
        let [k1, k2, k3, k4, k5] = self.k;
        (-k1 * g - k2 * g.powi(3) - k3 * (gd / self.eps1).tanh() - k4 * gd - k5 * gd * gd * (gd / self.eps2).tanh())
            / self.inertia
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PendulumUncertainty {
    Friction(FrictionModel),
    Kernel(KernelExpansion),
}

impl PendulumUncertainty {
    pub fn w2(&self, x: &[f64]) -> f64 {
        match self {
            PendulumUncertainty::Friction(m) => m.w2(x),
            PendulumUncertainty::Kernel(e) => e.value(x),
        }
    }
}

/// `ψ₀ = (π/4)² − γ²`
pub fn psi0(x: &[f64]) -> f64 {
    FRAC_PI_4 * FRAC_PI_4 - x[0] * x[0]
}

/// `ψ₁ = L_f ψ₀ + α₀ ψ₀ = −2γγ̇ + α₀ψ₀`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBarrier {
    pub alpha0: f64,
}

impl Barrier<f64> for AngleBarrier {
    fn value(&self, x: &[f64]) -> f64 {
        -2.0 * x[0] * x[1] + self.alpha0 * psi0(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![-2.0 * x[1] - 2.0 * self.alpha0 * x[0], -2.0 * x[0]]
    }
}

/// `γ_d(t) = −A cos ωt` and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Reference {
    pub fn at(&self, t: f64) -> [f64; 3] {
        let (s, c) = (self.frequency * t).sin_cos();
        let w = self.frequency;
        [-self.amplitude * c, self.amplitude * w * s, self.amplitude * w * w * c]
    }
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    kind: ScenarioKind,
    pub dynamics: PendulumDynamics,
    pub uncertainty: PendulumUncertainty,
    pub barrier: AngleBarrier,
    pub reference: Reference,
    pub gains: [f64; 2],
    pub force_limit: f64,
    alpha: ClassK<f64>,
    filter: FilterParams<f64>,
    model: ModelConfig<f64>,
    x0: [f64; 2],
    duration: f64,
}

const MODELED: [usize; 1] = [1];

impl Pendulum {
    pub fn new(cfg: &PendulumConfig) -> Result<Self, SimError> {
        let dynamics = PendulumDynamics { mass: cfg.mass, length: cfg.length, gravity: cfg.gravity };
        let friction = FrictionModel {
            k: [cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5],
            eps1: cfg.eps1,
            eps2: cfg.eps2,
            inertia: dynamics.inertia(),
        };
        Self::build(cfg, ScenarioKind::Pendulum, PendulumUncertainty::Friction(friction), cfg.model.to_config(), &cfg.filter)
    }

    /// Pendulum plant whose uncertainty is a random kernel expansion of known norm.
    pub fn synthetic(plant: &PendulumConfig, cfg: &SyntheticConfig) -> Result<Self, SimError> {
        let model = cfg.model.to_config();
        let norm = cfg.norm_fraction * model.rkhs_bound;
        let expansion = KernelExpansion::random(cfg.terms, &cfg.center_box, model.kernel, norm, cfg.seed);
        let mut p = Self::build(plant, ScenarioKind::Synthetic, PendulumUncertainty::Kernel(expansion), model, &cfg.filter)?;
        p.duration = cfg.duration;
        Ok(p)
    }

    fn build(
        cfg: &PendulumConfig,
        kind: ScenarioKind,
        uncertainty: PendulumUncertainty,
        model: ModelConfig<f64>,
        filter: &crate::config::PendulumFilter,
    ) -> Result<Self, SimError> {
        let positive = [cfg.mass, cfg.length, cfg.gravity, cfg.force_limit, cfg.alpha0, cfg.duration];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SimError::Config("pendulum mass, length, gravity, force limit, alpha0 and duration must be positive".into()));
        }
        let alpha = ClassK::Linear(filter.alpha);
        alpha.validate()?;
        model.validate()?;
        Ok(Self {
            kind,
            dynamics: PendulumDynamics { mass: cfg.mass, length: cfg.length, gravity: cfg.gravity },
            uncertainty,
            barrier: AngleBarrier { alpha0: cfg.alpha0 },
            reference: Reference { amplitude: cfg.reference_scale * PI / 4.0, frequency: cfg.reference_frequency },
            gains: [cfg.gain_position, cfg.gain_velocity],
            force_limit: cfg.force_limit,
            alpha,
            filter: filter.to_params(1)?,
            model,
            x0: cfg.x0,
            duration: cfg.duration,
        })
    }

    /// Unsaturated `u_d0 = mL²[−f₂ − μ̂₂ + γ̈_d − K₁e − K₂ė]`.
    pub fn desired_unsaturated(&self, t: f64, x: &[f64], mu2: f64) -> f64 {
        let [gd, gd_dot, gd_ddot] = self.reference.at(t);
        let (e, e_dot) = (x[0] - gd, x[1] - gd_dot);
        self.dynamics.inertia() * (-self.dynamics.f2(x[0]) - mu2 + gd_ddot - self.gains[0] * e - self.gains[1] * e_dot)
    }

    /// `u_d0` scaled down to magnitude `F_max` when it reaches it.
    pub fn saturate(&self, u: f64) -> f64 {
        if self.force_limit > u.abs() {
            u
        } else {
            self.force_limit / u.abs() * u
        }
    }
}

impl Scenario for Pendulum {
    fn kind(&self) -> ScenarioKind {
        self.kind
    }

    fn dynamics(&self) -> &dyn ControlAffine<f64> {
        &self.dynamics
    }

    fn uncertainty(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0, self.uncertainty.w2(x)]
    }

    fn modeled_entries(&self) -> &[usize] {
        &MODELED
    }

    fn initial_state(&self) -> Vec<f64> {
        self.x0.to_vec()
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn barrier(&self) -> &dyn Barrier<f64> {
        &self.barrier
    }

    fn alpha(&self) -> ClassK<f64> {
        self.alpha
    }

    fn filter_params(&self) -> &FilterParams<f64> {
        &self.filter
    }

    fn model_config(&self) -> ModelConfig<f64> {
        self.model.clone()
    }

    fn desired(&mut self, t: f64, x: &[f64], mean: &[f64]) -> Vec<f64> {
        vec![self.saturate(self.desired_unsaturated(t, x, mean[1]))]
    }

    fn log_names(&self) -> Vec<String> {
        columns(&["psi0", "psi1", "gamma_ref", "gamma_dot_ref", "tracking_error"])
    }

    fn log_values(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let [gd, gd_dot, _] = self.reference.at(t);
        vec![psi0(x), self.barrier.value(x), gd, gd_dot, x[0] - gd]
    }

    fn state_names(&self) -> Vec<String> {
        columns(&["gamma", "gamma_dot"])
    }

    fn input_names(&self) -> Vec<String> {
        columns(&["u"])
    }

    fn figures(&self) -> Vec<Figure> {
        let fig = |file, cols: &[&str]| Figure { file, columns: columns(cols) };
        vec![
            fig("fig_states.csv", &["t", "gamma", "gamma_dot", "gamma_ref", "gamma_dot_ref"]),
            fig("fig_barriers.csv", &["t", "psi0", "psi1", "psi"]),
            fig("fig_control.csv", &["t", "u", "u_desired", "delta", "lambda"]),
            fig("fig_estimate.csv", &["t", "mu_2", "w_2", "phi_2", "abs_err_2"]),
        ]
    }
}
