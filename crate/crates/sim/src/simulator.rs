//! Fixed-step closed loop: sample, update the model, filter, hold the control.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use safegp_core::{filter, BarrierSpec, BlendSchedule, BlendedModel, StreamingModel};

use crate::config::SimSection;
use crate::integrator::integrate;
use crate::noise::{measure, TruncatedGaussian};
use crate::scenario::{case_wiring, Case, Scenario};
use crate::trace::SimTrace;
use crate::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub duration: f64,
    pub control_rate: f64,
    pub substeps: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(section: &SimSection, duration: f64) -> Self {
        Self { duration, control_rate: section.control_rate, substeps: section.substeps, seed: section.seed }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.control_rate
    }

    /// Number of logged control steps.
    pub fn steps(&self) -> usize {
        (self.duration * self.control_rate).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(SimError::Config(format!("duration must be positive, got {}", self.duration)));
        }
        if !(self.control_rate > 0.0 && self.control_rate.is_finite()) {
            return Err(SimError::Config(format!("control rate must be positive, got {}", self.control_rate)));
        }
        if self.substeps == 0 {
            return Err(SimError::Config("substeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Wall-clock cost of the model updates.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunTiming {
    pub updates: usize,
    pub mean_update_s: f64,
    pub median_update_s: f64,
    pub max_update_s: f64,
    pub total_s: f64,
}

impl RunTiming {
    pub fn from_samples(samples: &[f64], total_s: f64) -> Self {
        if samples.is_empty() {
            return Self { total_s, ..Self::default() };
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        Self {
            updates: n,
            mean_update_s: sorted.iter().sum::<f64>() / n as f64,
            median_update_s: median,
            max_update_s: sorted[n - 1],
            total_s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: SimTrace,
    pub timing: RunTiming,
    /// Model state after the last update.
    pub model: StreamingModel<f64>,
}

/// Trace column names for a scenario, in logged order.
pub fn trace_columns(scenario: &dyn Scenario) -> Vec<String> {
    let inputs = scenario.input_names();
    let mut cols = vec!["t".to_string()];
    cols.extend(scenario.state_names());
    cols.extend(inputs.iter().cloned());
    cols.extend(inputs.iter().map(|n| format!("{n}_desired")));
    cols.extend(["delta", "lambda", "psi_nominal", "epsilon", "psi", "active"].map(String::from));
    cols.extend(scenario.log_names());
    for &i in scenario.modeled_entries() {
        let k = i + 1;
        cols.extend([format!("mu_{k}"), format!("phi_{k}"), format!("w_{k}"), format!("abs_err_{k}")]);
    }
    cols.push("sigma".into());
    cols
}

fn expand(n: usize, entries: &[usize], values: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; n];
    for (&i, &v) in entries.iter().zip(values) {
        full[i] = v;
    }
    full
}

/// Runs the closed loop for `sim.steps()` control periods.
///
/// Each period: measure `w` at the sampled state, update the model, swap it into
/// the blend, evaluate the blended estimate at the sample instant, route it by
/// case, filter the desired control, and hold the result over `substeps` RK4 steps.
pub fn run(scenario: &mut dyn Scenario, case: Case, sim: &SimConfig) -> Result<RunOutput, SimError> {
    sim.validate()?;
    let model_cfg = scenario.model_config();
    model_cfg.validate()?;
    let period = sim.period();
    if ((model_cfg.sample_period - period) / period).abs() > 1e-9 {
        return Err(SimError::Config(format!(
            "model sample period {} does not match control period {period}",
            model_cfg.sample_period
        )));
    }
    let n = scenario.dynamics().state_dim();
    let entries = scenario.modeled_entries().to_vec();
    let noise = TruncatedGaussian::new(model_cfg.noise);
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let schedule = BlendSchedule::new(model_cfg.blend_rate, model_cfg.sample_period)?;
    let alpha = scenario.alpha();

    let started = Instant::now();
    let mut x = scenario.initial_state();
    let observe = |s: &dyn Scenario, x: &[f64]| -> Vec<f64> {
        let w = s.uncertainty(x);
        entries.iter().map(|&i| w[i]).collect()
    };
    let y0 = measure(&observe(&*scenario, &x), &noise, &mut rng);
    let initial = model_cfg.prior_estimate(&x, entries.len());
    let mut model = StreamingModel::init(&x, &y0, model_cfg)?;
    let mu_init = expand(n, &entries, &initial.mean);
    let phi_init = expand(n, &entries, &initial.phi);
    let mut blend = BlendedModel::new(model.clone(), 0.0, schedule);

    let mut trace = SimTrace::new(trace_columns(&*scenario));
    let mut samples = Vec::with_capacity(sim.steps());
    let fail = |t: f64, message: String, trace: &SimTrace| SimError::Simulation {
        t,
        message,
        trace: Box::new(trace.clone()),
    };

    for k in 0..sim.steps() {
        let t = k as f64 * period;
        if k > 0 {
            let y = measure(&observe(&*scenario, &x), &noise, &mut rng);
            let clock = Instant::now();
            model.update(&x, &y).map_err(|e| fail(t, format!("model update: {e}"), &trace))?;
            samples.push(clock.elapsed().as_secs_f64());
            blend.swap(model.clone(), t);
        }
        let (mu_m, phi_m) = blend.blended(t, &x).map_err(|e| fail(t, format!("prediction: {e}"), &trace))?;
        let sigma = blend.previous().sigma(&x).map_err(|e| fail(t, format!("prediction: {e}"), &trace))?;
        let mu = expand(n, &entries, &mu_m);
        let phi = expand(n, &entries, &phi_m);
        let wiring = case_wiring(case, &mu, &phi, &mu_init, &phi_init);
        let u_d = scenario.desired(t, &x, wiring.desired_mean);
        let spec = BarrierSpec { barrier: scenario.barrier(), alpha };
        let res = filter(&x, wiring.constraint_mean, wiring.constraint_bound, &u_d, &spec, scenario.filter_params(), scenario.dynamics())
            .map_err(|e| fail(t, format!("safety filter: {e}"), &trace))?;

        let w_true = scenario.uncertainty(&x);
        let mut row = Vec::with_capacity(trace.columns().len());
        row.push(t);
        row.extend_from_slice(&x);
        row.extend_from_slice(&res.u_star);
        row.extend_from_slice(&u_d);
        row.extend([
            res.delta_star,
            res.lambda_star,
            res.omega,
            res.epsilon,
            res.psi_star,
            if res.constraint_active { 1.0 } else { 0.0 },
        ]);
        row.extend(scenario.log_values(t, &x));
        for (j, &i) in entries.iter().enumerate() {
            row.extend([mu_m[j], phi_m[j], w_true[i], (mu_m[j] - w_true[i]).abs()]);
        }
        row.push(sigma);
        trace.push(row)?;

        let u = res.u_star;
        let field = |z: &[f64]| scenario.vector_field(z, &u);
        let next = integrate(&field, &x, period, sim.substeps);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(fail(t + period, "state became non-finite".into(), &trace));
        }
        x = next;
    }
    let timing = RunTiming::from_samples(&samples, started.elapsed().as_secs_f64());
    Ok(RunOutput { trace, timing, model })
}
