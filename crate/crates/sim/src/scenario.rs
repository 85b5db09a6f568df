//! The interface a plant exposes to the closed-loop simulator.

use std::fmt;
use std::str::FromStr;

use safegp_core::{Barrier, ClassK, ControlAffine, FilterParams, ModelConfig};

use crate::SimError;

/// Which estimates feed the constraint and the desired controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// Live estimate and bound in both.
    Adaptive,
    /// Live estimate and bound in the constraint; initial estimate in the desired control.
    FrozenDesired,
    /// Initial estimate and bound in the constraint; live estimate in the desired control.
    FrozenConstraint,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::Adaptive, Case::FrozenDesired, Case::FrozenConstraint];

    pub fn id(self) -> u8 {
        match self {
            Case::Adaptive => 1,
            Case::FrozenDesired => 2,
            Case::FrozenConstraint => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self, SimError> {
        match id {
            1 => Ok(Case::Adaptive),
            2 => Ok(Case::FrozenDesired),
            3 => Ok(Case::FrozenConstraint),
            other => Err(SimError::Config(format!("case must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Estimates handed to the constraint and to the desired controller.
#[derive(Debug, Clone, PartialEq)]
pub struct Wiring<'a> {
    pub constraint_mean: &'a [f64],
    pub constraint_bound: &'a [f64],
    pub desired_mean: &'a [f64],
}

/// Routes live and initial estimates according to the case.
pub fn case_wiring<'a>(
    case: Case,
    live_mean: &'a [f64],
    live_bound: &'a [f64],
    initial_mean: &'a [f64],
    initial_bound: &'a [f64],
) -> Wiring<'a> {
    match case {
        Case::Adaptive => Wiring { constraint_mean: live_mean, constraint_bound: live_bound, desired_mean: live_mean },
        Case::FrozenDesired => {
            Wiring { constraint_mean: live_mean, constraint_bound: live_bound, desired_mean: initial_mean }
        }
        Case::FrozenConstraint => {
            Wiring { constraint_mean: initial_mean, constraint_bound: initial_bound, desired_mean: live_mean }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Pendulum,
    Robot,
    Synthetic,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Pendulum => "pendulum",
            ScenarioKind::Robot => "robot",
            ScenarioKind::Synthetic => "synthetic",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pendulum" => Ok(ScenarioKind::Pendulum),
            "robot" => Ok(ScenarioKind::Robot),
            "synthetic" => Ok(ScenarioKind::Synthetic),
            other => Err(SimError::Config(format!(
                "unknown scenario {other:?}; expected pendulum, robot or synthetic"
            ))),
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A named subset of trace columns written as its own data file.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub file: &'static str,
    pub columns: Vec<String>,
}

/// A plant with partially unknown dynamics, a safety constraint and a nominal controller.
pub trait Scenario {
    fn kind(&self) -> ScenarioKind;

    /// Known part `ẋ = f(x) + g(x)u`.
    fn dynamics(&self) -> &dyn ControlAffine<f64>;

    /// The unknown part `w(x)`, full state length.
    fn uncertainty(&self, x: &[f64]) -> Vec<f64>;

    /// Indices of the state entries where `w` can be nonzero.
    fn modeled_entries(&self) -> &[usize];

    fn initial_state(&self) -> Vec<f64>;

    fn duration(&self) -> f64;

    /// `ψ_{d−1}`, the barrier the filter acts on.
    fn barrier(&self) -> &dyn Barrier<f64>;

    fn alpha(&self) -> ClassK<f64>;

    fn filter_params(&self) -> &FilterParams<f64>;

    fn model_config(&self) -> ModelConfig<f64>;

    /// Nominal control given an estimate of `w`, full state length.
    fn desired(&mut self, t: f64, x: &[f64], mean: &[f64]) -> Vec<f64>;

    /// Extra per-step trace columns.
    fn log_names(&self) -> Vec<String>;

    fn log_values(&self, t: f64, x: &[f64]) -> Vec<f64>;

    fn state_names(&self) -> Vec<String>;

    fn input_names(&self) -> Vec<String>;

    fn figures(&self) -> Vec<Figure>;

    /// True full derivative `f + w + g u`.
    fn vector_field(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let dynamics = self.dynamics();
        let f = dynamics.drift(x);
        let g = dynamics.input_matrix(x);
        let w = self.uncertainty(x);
        let gu = g.mul_vec(u).expect("input dimension");
        f.iter().zip(&w).zip(&gu).map(|((a, b), c)| a + b + c).collect()
    }
}

pub(crate) fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}
