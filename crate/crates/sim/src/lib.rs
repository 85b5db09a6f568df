//! Closed-loop simulations of the streaming GP model feeding the CBF safety
//! filter: an inverted pendulum, a differential-drive robot and a pendulum with
//! a known in-RKHS uncertainty.

use std::path::PathBuf;

pub mod bench;
pub mod config;
pub mod integrator;
pub mod noise;
pub mod pendulum;
pub mod robot;
pub mod scenario;
pub mod simulator;
pub mod summary;
pub mod synthetic;
pub mod trace;
pub mod verify;

pub use config::RunConfig;
pub use scenario::{case_wiring, Case, Figure, Scenario, ScenarioKind, Wiring};
pub use simulator::{run, RunOutput, RunTiming, SimConfig};
pub use summary::{Summary, SummaryWindows};
pub use trace::SimTrace;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] safegp_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("simulation failed at t = {t}: {message}")]
    Simulation { t: f64, message: String, trace: Box<SimTrace> },
}

impl SimError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }
}

/// Builds the scenario named by `kind` from the run configuration.
pub fn build_scenario(kind: ScenarioKind, cfg: &RunConfig) -> Result<Box<dyn Scenario>, SimError> {
    Ok(match kind {
        ScenarioKind::Pendulum => Box::new(pendulum::Pendulum::new(&cfg.pendulum)?),
        ScenarioKind::Robot => Box::new(robot::Robot::new(&cfg.robot)?),
        ScenarioKind::Synthetic => Box::new(pendulum::Pendulum::synthetic(&cfg.pendulum, &cfg.synthetic)?),
    })
}
