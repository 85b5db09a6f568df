//! Run configuration. Every field has a default; an empty file reproduces
//! the reference setups.

use serde::{Deserialize, Serialize};

use safegp_core::{FilterParams, KernelParams, ModelConfig, VarsigmaRule};

use crate::SimError;

macro_rules! model_section {
    ($name:ident, noise = $noise:expr, bandwidth = $bw:expr) => {
        /// Streaming-model settings.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            pub budget: usize,
            pub local_budget: usize,
            pub noise: f64,
            pub rkhs_bound: f64,
            pub kernel_scale: f64,
            pub kernel_bandwidth: f64,
            pub sample_period: f64,
            pub blend_rate: f64,
            pub refresh_interval: usize,
        }

        impl Default for $name {
            fn default() -> Self {
                Self {
                    budget: 100,
                    local_budget: 50,
                    noise: $noise,
                    rkhs_bound: 100.0,
                    kernel_scale: 100.0,
                    kernel_bandwidth: $bw,
                    sample_period: 1e-3,
                    blend_rate: 10.0,
                    refresh_interval: 0,
                }
            }
        }

        impl $name {
            pub fn to_config(&self) -> ModelConfig<f64> {
                ModelConfig {
                    budget: self.budget,
                    local_budget: self.local_budget,
                    noise: self.noise,
                    rkhs_bound: self.rkhs_bound,
                    kernel: KernelParams { scale: self.kernel_scale, bandwidth: self.kernel_bandwidth },
                    sample_period: self.sample_period,
                    blend_rate: self.blend_rate,
                    refresh_interval: self.refresh_interval,
                    varsigma_rule: VarsigmaRule::Corrected,
                }
            }
        }
    };
}

macro_rules! filter_section {
    ($name:ident, weight = $h:expr, beta = $beta:expr, alpha = $alpha:expr) => {
        /// Filter cost `H = weight·I`, slack weight and outer class-K gain.
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            pub weight: f64,
            pub beta: f64,
            pub alpha: f64,
        }

        impl Default for $name {
            fn default() -> Self {
                Self { weight: $h, beta: $beta, alpha: $alpha }
            }
        }

        impl $name {
            pub fn to_params(&self, inputs: usize) -> Result<FilterParams<f64>, SimError> {
                Ok(FilterParams::scaled_identity(inputs, self.weight, self.beta)?)
            }
        }
    };
}

model_section!(PendulumModel, noise = 1.0, bandwidth = 0.5);
model_section!(RobotModel, noise = 0.5, bandwidth = 0.1);
filter_section!(PendulumFilter, weight = 2.0, beta = 200.0, alpha = 20.0);
filter_section!(RobotFilter, weight = 2.0, beta = 2.0, alpha = 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Control and sampling rate in Hz.
    pub control_rate: f64,
    /// RK4 steps per control period.
    pub substeps: usize,
    pub seed: u64,
    /// Start of the steady-state window used for the active-fraction report.
    pub steady_state_start: f64,
    /// Start of the window used for the tracking RMS report.
    pub tracking_start: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self { control_rate: 1000.0, substeps: 10, seed: 0, steady_state_start: 45.0, tracking_start: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumConfig {
    pub duration: f64,
    pub mass: f64,
    pub length: f64,
    pub gravity: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub force_limit: f64,
    pub gain_position: f64,
    pub gain_velocity: f64,
    /// Gain of the inner class-K function lifting `ψ₀` to `ψ₁`.
    pub alpha0: f64,
    pub reference_scale: f64,
    pub reference_frequency: f64,
    pub x0: [f64; 2],
    pub model: PendulumModel,
    pub filter: PendulumFilter,
}

impl Default for PendulumConfig {
    fn default() -> Self {
        Self {
            duration: 40.0,
            mass: 0.5,
            length: 0.15,
            gravity: 9.81,
            k1: 0.5,
            k2: 0.35,
            k3: 0.15,
            k4: 0.5,
            k5: 0.25,
            eps1: 2.0,
            eps2: 2.0,
            force_limit: 0.35,
            gain_position: 25.0,
            gain_velocity: 50.0,
            alpha0: 200.0,
            reference_scale: 0.99,
            reference_frequency: 0.5,
            x0: [0.1745, 0.0],
            model: PendulumModel::default(),
            filter: PendulumFilter::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub duration: f64,
    pub torque_constant: f64,
    pub wheel_radius: f64,
    pub wheel_base: f64,
    pub tip_offset: f64,
    pub armature_resistance: f64,
    pub mass: f64,
    pub inertia: f64,
    pub a1: f64,
    pub a2: f64,
    pub back_emf: f64,
    pub friction: f64,
    pub slope: f64,
    pub gravity: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub gain_speed: f64,
    pub gain_turn: f64,
    pub obstacle_radius: f64,
    pub obstacles: Vec<Obstacle>,
    /// `[x_min, x_max, y_min, y_max]`
    pub room: [f64; 4],
    pub wall_sharpness: f64,
    pub compose_sharpness: f64,
    pub lift_gain: f64,
    pub speed_limit: f64,
    pub turn_limit: f64,
    pub x0: [f64; 5],
    pub waypoints: Vec<[f64; 2]>,
    pub switch_radius: f64,
    pub model: RobotModel,
    pub filter: RobotFilter,
}

impl Default for RobotConfig {
    fn default() -> Self {
        let ob = |x, y, weight| Obstacle { x, y, weight };
        Self {
            duration: 60.0,
            torque_constant: 0.1,
            wheel_radius: 0.1,
            wheel_base: 0.5,
            tip_offset: 0.25,
            armature_resistance: 0.27,
            mass: 10.0,
            inertia: 0.83,
            a1: 1.0,
            a2: 1.0,
            back_emf: 0.0487,
            friction: 0.025,
            slope: 0.5,
            gravity: 9.81,
            mu1: 0.25,
            mu2: 0.25,
            gain_speed: 2.0,
            gain_turn: 2.0,
            obstacle_radius: 0.6,
            obstacles: vec![ob(0.35, 0.7, 1.0), ob(2.75, 1.75, 0.5), ob(2.5, -0.25, 0.5), ob(1.0, 2.2, 0.5)],
            room: [-1.0, 4.0, -1.0, 3.0],
            wall_sharpness: 20.0,
            compose_sharpness: 20.0,
            lift_gain: 2.0,
            speed_limit: 1.0,
            turn_limit: 1.0,
            x0: [-0.5, 0.5, 0.0, 0.0, 0.0],
            waypoints: vec![[0.4, -0.4], [1.4, 0.1], [1.6, 1.0]],
            switch_radius: 0.1,
            model: RobotModel::default(),
            filter: RobotFilter::default(),
        }
    }
}

/// Pendulum plant with a known in-RKHS uncertainty replacing the friction model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub duration: f64,
    pub terms: usize,
    /// RKHS norm of the uncertainty as a fraction of the trusted bound.
    pub norm_fraction: f64,
    pub seed: u64,
    /// Centers are drawn uniformly from `[−a, a] × [−b, b]`.
    pub center_box: [f64; 2],
    pub model: PendulumModel,
    pub filter: PendulumFilter,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            duration: 10.0,
            terms: 20,
            norm_fraction: 0.9,
            seed: 7,
            center_box: [1.0, 2.0],
            model: PendulumModel::default(),
            filter: PendulumFilter::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimSection,
    pub pendulum: PendulumConfig,
    pub robot: RobotConfig,
    pub synthetic: SyntheticConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_sections_keep_scenario_defaults() {
        let c = RunConfig::from_toml("[robot.model]\nbudget = 40\n").unwrap();
        assert_eq!(c.robot.model.budget, 40);
        assert_eq!(c.robot.model.noise, 0.5);
        assert_eq!(c.robot.model.kernel_bandwidth, 0.1);
        assert_eq!(c.pendulum.model.noise, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[sim]\nsede = 3\n").is_err());
        assert!(RunConfig::from_toml("[nope]\n").is_err());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.sim.seed = 42;
        c.robot.waypoints = vec![[1.0, 1.0]];
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
