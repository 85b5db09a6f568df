//! Runtime property suites: recursive-state equivalence, bound validity,
//! constraint conservativeness and filter optimality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use safegp_core::{
    filter_terms, ConstraintTerms, DenseMatrix, DirectState, FilterParams, ModelConfig, StreamingModel, VarsigmaRule,
};

use crate::config::RunConfig;
use crate::noise::{measure, TruncatedGaussian};
use crate::pendulum::Pendulum;
use crate::scenario::{Case, Scenario};
use crate::simulator::{run, SimConfig};
use crate::SimError;

/// Deliberate faults, used to show the suites can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Perturb one entry of `Σ` midway through the streaming run.
    CorruptInverse,
    /// Use the uncorrected row-sum extension.
    PrintedVarsigma,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Worst observed value of the suite's error measure.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

/// `(x, w)` pairs along a simulated closed-loop trajectory, every `stride`-th step.
pub fn trajectory(
    scenario: &mut dyn Scenario,
    sim: &SimConfig,
    stride: usize,
    count: usize,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>, SimError> {
    let out = run(scenario, Case::Adaptive, sim)?;
    let trace = out.trace;
    let states = scenario.state_names();
    let state_idx: Vec<usize> = states.iter().map(|n| trace.index(n).expect("state column")).collect();
    let w_idx: Vec<usize> = scenario
        .modeled_entries()
        .iter()
        .map(|i| trace.index(&format!("w_{}", i + 1)).expect("uncertainty column"))
        .collect();
    let picked: Vec<_> = trace
        .rows()
        .iter()
        .step_by(stride.max(1))
        .take(count)
        .map(|r| (state_idx.iter().map(|&j| r[j]).collect(), w_idx.iter().map(|&j| r[j]).collect()))
        .collect();
    if picked.len() < count {
        return Err(SimError::Config(format!("trajectory has {} samples, need {count}", picked.len())));
    }
    Ok(picked)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Recursive `(Σ, ϑ, ς)` against direct recomputation after each of 500 updates.
pub fn recursive_state_suite(cfg: &RunConfig, fault: Fault) -> Result<SuiteReport, SimError> {
    const UPDATES: usize = 500;
    const TOL: f64 = 1e-6;
    let mut plant = Pendulum::new(&cfg.pendulum)?;
    const STRIDE: usize = 20;
    let duration = ((UPDATES + 1) * STRIDE) as f64 / cfg.sim.control_rate;
    let samples = trajectory(&mut plant, &SimConfig::new(&cfg.sim, duration), STRIDE, UPDATES + 1)?;
    let mut model_cfg: ModelConfig<f64> = cfg.pendulum.model.to_config();
    model_cfg.budget = 30;
    model_cfg.local_budget = 15;
    if fault == Fault::PrintedVarsigma {
        model_cfg.varsigma_rule = VarsigmaRule::AsPrinted;
    }
    let noise = TruncatedGaussian::new(model_cfg.noise);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed);
    let (x0, w0) = &samples[0];
    let mut model = StreamingModel::init(x0, &measure(w0, &noise, &mut rng), model_cfg.clone())?;
    let mut worst = [0.0f64; 3];
    for (k, (x, w)) in samples[1..].iter().enumerate() {
        if let Err(e) = model.update(x, &measure(w, &noise, &mut rng)) {
            return Ok(SuiteReport {
                name: "recursive-state",
                passed: false,
                checks: k,
                worst: worst.iter().copied().fold(0.0, f64::max),
                tolerance: TOL,
                detail: format!("update {} failed: {e}", k + 1),
            });
        }
        if fault == Fault::CorruptInverse && k == UPDATES / 2 {
            model.corrupt_inverse(3, 7, 1e-3);
        }
        let direct = DirectState::compute(
            model.data(),
            model.targets(),
            &model_cfg.kernel,
            model_cfg.noise,
            model_cfg.rkhs_bound,
        )?;
        worst[0] = worst[0].max(rel_err(model.inverse().as_slice(), direct.inverse.as_slice()));
        worst[1] = worst[1].max(rel_err(model.weights().as_slice(), direct.weights.as_slice()));
        worst[2] = worst[2].max(rel_err(model.row_sums(), &direct.row_sums));
    }
    let w = worst.iter().copied().fold(0.0, f64::max);
    Ok(SuiteReport {
        name: "recursive-state",
        passed: w <= TOL,
        checks: UPDATES,
        worst: w,
        tolerance: TOL,
        detail: format!("max relative error Sigma {:.3e}, vartheta {:.3e}, varsigma {:.3e}", worst[0], worst[1], worst[2]),
    })
}

/// `|μ − w| ≤ Bσ` at random queries for an uncertainty of known RKHS norm.
pub fn bound_validity_suite(cfg: &RunConfig, updates: usize, queries: usize) -> Result<SuiteReport, SimError> {
    let mut plant = Pendulum::synthetic(&cfg.pendulum, &cfg.synthetic)?;
    let sim = SimConfig::new(&cfg.sim, cfg.synthetic.duration);
    let stride = (sim.steps() / (updates + 1)).max(1);
    let samples = trajectory(&mut plant, &sim, stride, updates + 1)?;
    let model_cfg = cfg.synthetic.model.to_config();
    let noise = TruncatedGaussian::new(model_cfg.noise);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sim.seed ^ 0x5eed);
    let (x0, w0) = &samples[0];
    let mut model = StreamingModel::init(x0, &measure(w0, &noise, &mut rng), model_cfg)?;
    for (x, w) in &samples[1..] {
        model.update(x, &measure(w, &noise, &mut rng))?;
    }
    let [a, b] = cfg.synthetic.center_box;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..queries {
        let x = [rng.random_range(-a..=a), rng.random_range(-b..=b)];
        let est = model.predict(&x)?;
        let err = (est.mean[0] - plant.uncertainty(&x)[1]).abs();
        if err > est.phi[0] {
            violations += 1;
        }
        worst = worst.max(err / est.phi[0]);
    }
    Ok(SuiteReport {
        name: "bound-validity",
        passed: violations == 0,
        checks: queries,
        worst,
        tolerance: 1.0,
        detail: format!("{violations} violations after {updates} updates; max |mu - w| / phi = {worst:.3e}"),
    })
}

fn random_terms(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ConstraintTerms<f64> {
    let mut r = |s: f64| rng.random_range(-s..s);
    let value = r(2.0);
    ConstraintTerms {
        value,
        gradient: (0..n).map(|_| r(3.0)).collect(),
        lie_drift: r(5.0),
        lie_input: (0..m).map(|_| r(3.0)).collect(),
        alpha_value: 1.5 * value,
    }
}

/// `ψ(μ, φ) ≤ ψ(w, 0)` whenever `|μ − w| ≤ φ` entrywise.
pub fn conservative_suite(instances: usize, seed: u64) -> Result<SuiteReport, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=3));
        let terms = random_terms(&mut rng, n, m);
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let mu: Vec<f64> = w.iter().zip(&phi).map(|(&wi, &p)| wi + p * rng.random_range(-1.0..=1.0)).collect();
        let u: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let delta = rng.random_range(-2.0..2.0);
        let lower = terms.psi(&mu, &phi, &u, delta)?;
        let exact = terms.psi(&w, &vec![0.0; n], &u, delta)?;
        worst = worst.max(lower - exact);
    }
    let tol = 1e-9;
    Ok(SuiteReport {
        name: "conservative-constraint",
        passed: worst <= tol,
        checks: instances,
        worst,
        tolerance: tol,
        detail: format!("max psi(mu, phi) - psi(w, 0) = {worst:.3e}"),
    })
}

fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> DenseMatrix<f64> {
    let a = DenseMatrix::from_row_slice(m, m, &(0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
        .expect("square");
    let mut h = a.tr_mul_mat(&a).expect("square");
    h.add_diagonal(0.5);
    h.symmetrize_from_upper();
    h
}

/// Stationarity of the closed-form minimizer and dominance over feasible perturbations.
pub fn optimality_suite(instances: usize, perturbations: usize, seed: u64) -> Result<SuiteReport, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_kkt = 0.0f64;
    let mut worst_gain = f64::NEG_INFINITY;
    for _ in 0..instances {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=3));
        let terms = random_terms(&mut rng, n, m);
        let params = FilterParams::new(random_spd(&mut rng, m), rng.random_range(0.1..10.0))?;
        let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let u_d: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let res = filter_terms(&terms, &mu, &phi, &u_d, &params)?;
        let du: Vec<f64> = res.u_star.iter().zip(&u_d).map(|(a, b)| a - b).collect();
        let h_du = params.weight().mul_vec(&du)?;
        let mut kkt = h_du.iter().zip(&terms.lie_input).fold(0.0f64, |m, (h, g)| m.max((h - res.lambda_star * g).abs()));
        kkt = kkt.max((params.beta() * res.delta_star - res.lambda_star * terms.value).abs());
        kkt = kkt.max((res.lambda_star * res.psi_star).abs()).max((-res.psi_star).max(0.0));
        worst_kkt = worst_kkt.max(kkt);

        let best = params.cost(&res.u_star, &u_d, res.delta_star);
        let slope_norm = terms.lie_input.iter().map(|g| g * g).sum::<f64>() + terms.value * terms.value;
        for _ in 0..perturbations {
            let scale = 10f64.powf(rng.random_range(-6.0..0.0));
            let mut u: Vec<f64> = res.u_star.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect();
            let mut delta = res.delta_star + scale * rng.random_range(-1.0..1.0);
            let psi = terms.psi(&mu, &phi, &u, delta)?;
            if psi < 0.0 {
                let step = -psi / slope_norm;
                u.iter_mut().zip(&terms.lie_input).for_each(|(v, g)| *v += step * g);
                delta += step * terms.value;
            }
            if terms.psi(&mu, &phi, &u, delta)? < 0.0 {
                continue;
            }
            worst_gain = worst_gain.max(best - params.cost(&u, &u_d, delta));
        }
    }
    let tol = 1e-9;
    Ok(SuiteReport {
        name: "filter-optimality",
        passed: worst_kkt <= tol && worst_gain <= tol,
        checks: instances * (perturbations + 1),
        worst: worst_kkt.max(worst_gain),
        tolerance: tol,
        detail: format!("max KKT residual {worst_kkt:.3e}; max cost improvement over optimum {worst_gain:.3e}"),
    })
}

pub fn run_verify(cfg: &RunConfig, fault: Fault) -> Result<VerifyReport, SimError> {
    Ok(VerifyReport {
        suites: vec![
            recursive_state_suite(cfg, fault)?,
            bound_validity_suite(cfg, 200, 10_000)?,
            conservative_suite(10_000, cfg.sim.seed)?,
            optimality_suite(1_000, 1_000, cfg.sim.seed)?,
        ],
    })
}
