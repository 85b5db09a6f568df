//! Differential-drive robot on a slope, visiting waypoints in a walled room
//! with circular obstacles and speed limits.

use safegp_core::{
    softmin, softmin_gradient, AffineBarrier, Barrier, ClassK, ControlAffine, CurvedBarrier, DenseMatrix,
    DriftJacobian, FilterParams, HocbfLift, ModelConfig, SoftMin,
};

use crate::config::RobotConfig;
use crate::scenario::{columns, Figure, Scenario, ScenarioKind};
use crate::SimError;

/// Known part on `[q_x, q_y, γ, v, ω]`: tip kinematics plus motor input gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotDynamics {
    pub tip_offset: f64,
    /// `k_m/(m r R_a)`
    pub speed_gain: f64,
    /// `k_m l/(I r R_a)`
    pub turn_gain: f64,
}

impl ControlAffine<f64> for RobotDynamics {
    fn state_dim(&self) -> usize {
        5
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn drift(&self, x: &[f64]) -> Vec<f64> {
        let (s, c) = x[2].sin_cos();
        let (v, w, ld) = (x[3], x[4], self.tip_offset);
        vec![v * c - ld * w * s, v * s + ld * w * c, w, 0.0, 0.0]
    }
    fn input_matrix(&self, _x: &[f64]) -> DenseMatrix<f64> {
        let (a, b) = (self.speed_gain, self.turn_gain);
        DenseMatrix::from_rows(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [a, a], [b, -b]]).expect("5x2")
    }
}

impl DriftJacobian<f64> for RobotDynamics {
    fn drift_jacobian(&self, x: &[f64]) -> DenseMatrix<f64> {
        let (s, c) = x[2].sin_cos();
        let (v, w, ld) = (x[3], x[4], self.tip_offset);
        DenseMatrix::from_rows(&[
            [0.0, 0.0, -v * s - ld * w * c, c, -ld * s],
            [0.0, 0.0, v * c - ld * w * s, s, ld * c],
            [0.0, 0.0, 0.0, 0.0, 1.0],
            [0.0; 5],
            [0.0; 5],
        ])
        .expect("5x5")
    }
}

/// Motor back-EMF, friction and slope terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotUncertainty {
    /// `2(k_b k_m/(m r R_a) + ε/(m r))`
    pub speed_damping: f64,
    /// `k_b k_m l²/(I r² R_a) + l ε/(I r²)`
    pub turn_damping: f64,
    pub a1: f64,
    pub a2: f64,
    /// `κ g`
    pub slope_accel: f64,
}

impl RobotUncertainty {
    pub fn w4(&self, x: &[f64]) -> f64 {
        let v = x[3];
        -self.speed_damping * (v + self.a1 * v * v * (2.5 * v).tanh()) - self.slope_accel * x[2].sin()
    }

    pub fn w5(&self, x: &[f64]) -> f64 {
        let w = x[4];
        -self.turn_damping * (w + self.a2 * w * w * (2.5 * w).tanh())
    }
}

/// `weight·((q_x − c_x)² + (q_y − c_y)² − R²)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleObstacle {
    pub center: [f64; 2],
    pub radius: f64,
    pub weight: f64,
}

impl Barrier<f64> for CircleObstacle {
    fn value(&self, x: &[f64]) -> f64 {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        self.weight * (dx * dx + dy * dy - self.radius * self.radius)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[0] = 2.0 * self.weight * (x[0] - self.center[0]);
        g[1] = 2.0 * self.weight * (x[1] - self.center[1]);
        g
    }
}

impl CurvedBarrier<f64> for CircleObstacle {
    fn hessian(&self, x: &[f64]) -> DenseMatrix<f64> {
        let mut h = DenseMatrix::zeros(x.len(), x.len());
        h[(0, 0)] = 2.0 * self.weight;
        h[(1, 1)] = 2.0 * self.weight;
        h
    }
}

/// `0.5(limit² − x_i²)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub index: usize,
    pub limit: f64,
}

impl Barrier<f64> for RateBound {
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * (self.limit * self.limit - x[self.index] * x[self.index])
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.index] = -x[self.index];
        g
    }
}

/// A relative-degree-two position constraint.
#[derive(Debug, Clone)]
pub enum PositionBarrier {
    Obstacle(CircleObstacle),
    Walls(SoftMin<AffineBarrier<f64>, f64>),
}

impl Barrier<f64> for PositionBarrier {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            PositionBarrier::Obstacle(b) => b.value(x),
            PositionBarrier::Walls(b) => b.value(x),
        }
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            PositionBarrier::Obstacle(b) => b.gradient(x),
            PositionBarrier::Walls(b) => b.gradient(x),
        }
    }
}

impl CurvedBarrier<f64> for PositionBarrier {
    fn hessian(&self, x: &[f64]) -> DenseMatrix<f64> {
        match self {
            PositionBarrier::Obstacle(b) => b.hessian(x),
            PositionBarrier::Walls(b) => b.hessian(x),
        }
    }
}

/// Room `[x_min, x_max] × [y_min, y_max]` as the softmin of its four sides.
pub fn room_walls(room: [f64; 4], sharpness: f64) -> Result<SoftMin<AffineBarrier<f64>, f64>, SimError> {
    let side = |i: usize, sign: f64, offset: f64| {
        let mut c = vec![0.0; 5];
        c[i] = sign;
        AffineBarrier { coefficients: c, offset }
    };
    let [x0, x1, y0, y1] = room;
    Ok(SoftMin::new(vec![side(0, 1.0, -x0), side(0, -1.0, x1), side(1, 1.0, -y0), side(1, -1.0, y1)], sharpness)?)
}

/// `ψ₀ = softmin(φ_{1,1}, …, φ_{5,1}, φ_{6,0}, φ_{7,0})`
#[derive(Debug, Clone)]
pub struct RobotBarrier {
    pub lifted: Vec<HocbfLift<PositionBarrier, RobotDynamics, f64>>,
    pub rates: Vec<RateBound>,
    pub sharpness: f64,
}

impl RobotBarrier {
    pub fn components(&self, x: &[f64]) -> Vec<f64> {
        self.lifted.iter().map(|b| b.value(x)).chain(self.rates.iter().map(|b| b.value(x))).collect()
    }

    pub fn base_values(&self, x: &[f64]) -> Vec<f64> {
        self.lifted.iter().map(|b| b.base.value(x)).collect()
    }
}

impl Barrier<f64> for RobotBarrier {
    fn value(&self, x: &[f64]) -> f64 {
        softmin(&self.components(x), self.sharpness).expect("nonempty, positive sharpness")
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let grads: Vec<Vec<f64>> = self
            .lifted
            .iter()
            .map(|b| b.gradient(x))
            .chain(self.rates.iter().map(|b| b.gradient(x)))
            .collect();
        softmin_gradient(&self.components(x), &grads, self.sharpness).expect("matching lengths")
    }
}

/// Waypoint sequence advanced when the tip comes within the switch radius.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointTracker {
    pub waypoints: Vec<[f64; 2]>,
    pub switch_radius: f64,
    pub index: usize,
}

impl WaypointTracker {
    pub fn goal(&self) -> [f64; 2] {
        self.waypoints[self.index]
    }

    pub fn advance(&mut self, q: [f64; 2]) {
        let g = self.goal();
        let d = ((q[0] - g[0]).powi(2) + (q[1] - g[1]).powi(2)).sqrt();
        if d < self.switch_radius && self.index + 1 < self.waypoints.len() {
            self.index += 1;
        }
    }
}

/// Desired-motion gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotGains {
    pub mu1: f64,
    pub mu2: f64,
    pub k1: f64,
    pub k2: f64,
}

#[derive(Debug, Clone)]
pub struct Robot {
    pub dynamics: RobotDynamics,
    pub uncertainty: RobotUncertainty,
    pub barrier: RobotBarrier,
    pub tracker: WaypointTracker,
    pub gains: RobotGains,
    /// `m r R_a/(2k_m)` and `I r R_a/(2k_m l)`
    pub mixing: [f64; 2],
    alpha: ClassK<f64>,
    filter: FilterParams<f64>,
    model: ModelConfig<f64>,
    x0: [f64; 5],
    duration: f64,
}

const MODELED: [usize; 2] = [3, 4];

impl Robot {
    pub fn new(cfg: &RobotConfig) -> Result<Self, SimError> {
        let positive = [
            cfg.torque_constant,
            cfg.wheel_radius,
            cfg.wheel_base,
            cfg.tip_offset,
            cfg.armature_resistance,
            cfg.mass,
            cfg.inertia,
            cfg.obstacle_radius,
            cfg.lift_gain,
            cfg.speed_limit,
            cfg.turn_limit,
            cfg.switch_radius,
            cfg.duration,
        ];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SimError::Config("robot physical parameters, limits and duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&cfg.slope) {
            return Err(SimError::Config(format!("slope coefficient must lie in [0, 1], got {}", cfg.slope)));
        }
        if cfg.waypoints.is_empty() {
            return Err(SimError::Config("robot needs at least one waypoint".into()));
        }
        let (km, r, l, ra, m, i) =
            (cfg.torque_constant, cfg.wheel_radius, cfg.wheel_base, cfg.armature_resistance, cfg.mass, cfg.inertia);
        let dynamics = RobotDynamics { tip_offset: cfg.tip_offset, speed_gain: km / (m * r * ra), turn_gain: km * l / (i * r * ra) };
        let uncertainty = RobotUncertainty {
            speed_damping: 2.0 * (cfg.back_emf * km / (m * r * ra) + cfg.friction / (m * r)),
            turn_damping: cfg.back_emf * km * l * l / (i * r * r * ra) + l * cfg.friction / (i * r * r),
            a1: cfg.a1,
            a2: cfg.a2,
            slope_accel: cfg.slope * cfg.gravity,
        };
        let lift_alpha = ClassK::Linear(cfg.lift_gain);
        let mut lifted: Vec<_> = cfg
            .obstacles
            .iter()
            .map(|o| HocbfLift {
                base: PositionBarrier::Obstacle(CircleObstacle {
                    center: [o.x, o.y],
                    radius: cfg.obstacle_radius,
                    weight: o.weight,
                }),
                dynamics,
                alpha: lift_alpha,
            })
            .collect();
        lifted.push(HocbfLift {
            base: PositionBarrier::Walls(room_walls(cfg.room, cfg.wall_sharpness)?),
            dynamics,
            alpha: lift_alpha,
        });
        let rates = vec![RateBound { index: 3, limit: cfg.speed_limit }, RateBound { index: 4, limit: cfg.turn_limit }];
        if !(cfg.compose_sharpness > 0.0) {
            return Err(SimError::Config("composition sharpness must be positive".into()));
        }
        let alpha = ClassK::Linear(cfg.filter.alpha);
        alpha.validate()?;
        let model = cfg.model.to_config();
        model.validate()?;
        Ok(Self {
            dynamics,
            uncertainty,
            barrier: RobotBarrier { lifted, rates, sharpness: cfg.compose_sharpness },
            tracker: WaypointTracker { waypoints: cfg.waypoints.clone(), switch_radius: cfg.switch_radius, index: 0 },
            gains: RobotGains { mu1: cfg.mu1, mu2: cfg.mu2, k1: cfg.gain_speed, k2: cfg.gain_turn },
            mixing: [m * r * ra / (2.0 * km), i * r * ra / (2.0 * km * l)],
            alpha,
            filter: cfg.filter.to_params(2)?,
            model,
            x0: cfg.x0,
            duration: cfg.duration,
        })
    }

    /// Body-frame tip errors `(e₁, e₂)` to `goal`.
    pub fn errors(x: &[f64], goal: [f64; 2]) -> (f64, f64) {
        let (s, c) = x[2].sin_cos();
        let (dx, dy) = (x[0] - goal[0], x[1] - goal[1]);
        (dx * c + dy * s, -dx * s + dy * c)
    }

    /// `(u_d1, u_d2)` before motor mixing.
    pub fn desired_accelerations(&self, x: &[f64], goal: [f64; 2], mu4: f64, mu5: f64) -> (f64, f64) {
        let RobotGains { mu1, mu2, k1, k2 } = self.gains;
        let ld = self.dynamics.tip_offset;
        let (v, w) = (x[3], x[4]);
        let (e1, e2) = Self::errors(x, goal);
        let a_d = -(mu1 + mu2) * v - (1.0 + mu1 * mu2) * e1 + mu1 * mu1 / ld * e2 * e2;
        let w_d = -mu1 / ld * e2;
        // ė₂ along the tip kinematics with a fixed goal.
        let e2_dot = ld * w - w * e1;
        let ud1 = -mu4 + a_d - k1 * v;
        let ud2 = -mu5 - mu1 / ld * e2_dot - k2 * (w - w_d);
        (ud1, ud2)
    }

    /// `[u_r, u_l]` from `(u_d1, u_d2)`.
    pub fn mix(&self, ud1: f64, ud2: f64) -> [f64; 2] {
        let [a, b] = self.mixing;
        [a * ud1 + b * ud2, a * ud1 - b * ud2]
    }
}

impl Scenario for Robot {
    fn kind(&self) -> ScenarioKind {
        ScenarioKind::Robot
    }

    fn dynamics(&self) -> &dyn ControlAffine<f64> {
        &self.dynamics
    }

    fn uncertainty(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0, 0.0, 0.0, self.uncertainty.w4(x), self.uncertainty.w5(x)]
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

    fn desired(&mut self, _t: f64, x: &[f64], mean: &[f64]) -> Vec<f64> {
        self.tracker.advance([x[0], x[1]]);
        let (ud1, ud2) = self.desired_accelerations(x, self.tracker.goal(), mean[3], mean[4]);
        self.mix(ud1, ud2).to_vec()
    }

    fn log_names(&self) -> Vec<String> {
        let mut names = vec!["psi0".to_string()];
        let n = self.barrier.lifted.len();
        names.extend((1..n).map(|j| format!("obstacle_{j}")));
        names.push("wall".into());
        names.extend((1..=n).map(|j| format!("lifted_{j}")));
        names.extend(["speed_bound", "turn_bound", "goal_x", "goal_y", "goal_index", "e1", "e2"].map(String::from));
        names
    }

    fn log_values(&self, _t: f64, x: &[f64]) -> Vec<f64> {
        let goal = self.tracker.goal();
        let (e1, e2) = Self::errors(x, goal);
        let mut v = vec![self.barrier.value(x)];
        v.extend(self.barrier.base_values(x));
        v.extend(self.barrier.components(x));
        v.extend([goal[0], goal[1], self.tracker.index as f64, e1, e2]);
        v
    }

    fn state_names(&self) -> Vec<String> {
        columns(&["q_x", "q_y", "gamma", "v", "omega"])
    }

    fn input_names(&self) -> Vec<String> {
        columns(&["u_r", "u_l"])
    }

    fn figures(&self) -> Vec<Figure> {
        let fig = |file, cols: Vec<String>| Figure { file, columns: cols };
        let n = self.barrier.lifted.len();
        let mut barriers = columns(&["t", "psi0", "psi"]);
        barriers.extend((1..n).map(|j| format!("obstacle_{j}")));
        barriers.extend(columns(&["wall", "speed_bound", "turn_bound"]));
        vec![
            fig("fig_path.csv", columns(&["t", "q_x", "q_y", "goal_x", "goal_y"])),
            fig("fig_states.csv", columns(&["t", "q_x", "q_y", "gamma", "v", "omega", "goal_x", "goal_y"])),
            fig("fig_control.csv", columns(&["t", "u_r", "u_l", "u_r_desired", "u_l_desired", "delta", "lambda"])),
            fig("fig_barriers.csv", barriers),
            fig(
                "fig_estimate.csv",
                columns(&["t", "mu_4", "w_4", "phi_4", "abs_err_4", "mu_5", "w_5", "phi_5", "abs_err_5"]),
            ),
        ]
    }
}
