//! Per-update cost of the recursive model against full recomputation.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use safegp_core::{KernelParams, ModelConfig, RecomputingModel, StreamingModel, VarsigmaRule};

use crate::SimError;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub budgets: Vec<usize>,
    /// Timed updates per budget.
    pub steps: usize,
    /// Untimed updates before timing starts.
    pub warmup: usize,
    /// Repeated sweeps per budget; the reported median is the smallest one.
    pub rounds: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { budgets: vec![50, 100, 200, 400], steps: 200, warmup: 10, rounds: 3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub budget: usize,
    pub recursive_mean_s: f64,
    pub recursive_median_s: f64,
    pub batch_mean_s: f64,
    pub batch_median_s: f64,
    /// Batch median over recursive median.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub steps: usize,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log median time against log budget.
    pub recursive_slope: f64,
    pub batch_slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn mean_median(samples: &mut [f64]) -> (f64, f64) {
    samples.sort_by(f64::total_cmp);
    let n = samples.len();
    let median = if n % 2 == 1 { samples[n / 2] } else { 0.5 * (samples[n / 2 - 1] + samples[n / 2]) };
    (samples.iter().sum::<f64>() / n as f64, median)
}

fn bench_config(budget: usize) -> ModelConfig<f64> {
    ModelConfig {
        budget,
        local_budget: budget / 2,
        noise: 1.0,
        rkhs_bound: 100.0,
        kernel: KernelParams { scale: 100.0, bandwidth: 0.5 },
        sample_period: 1e-3,
        blend_rate: 10.0,
        refresh_interval: 0,
        varsigma_rule: VarsigmaRule::Corrected,
    }
}

/// A slow random walk in the plane with a smooth target, standing in for a sampled trajectory.
fn stream(len: usize, seed: u64) -> Vec<([f64; 2], [f64; 1])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = [0.0f64, 0.0];
    (0..len)
        .map(|_| {
            x[0] += rng.random_range(-0.05..0.05);
            x[1] += rng.random_range(-0.05..0.05);
            let y = [10.0 * x[0].sin() - 3.0 * x[1] + rng.random_range(-1.0..1.0)];
            (x, y)
        })
        .collect()
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, SimError> {
    if cfg.budgets.len() < 2 || cfg.budgets.windows(2).any(|w| w[0] >= w[1]) || cfg.budgets[0] < 2 {
        return Err(SimError::Config("budgets must be at least two ascending values, each ≥ 2".into()));
    }
    if cfg.steps == 0 || cfg.rounds == 0 {
        return Err(SimError::Config("steps and rounds must be positive".into()));
    }
    let data = stream(cfg.warmup + cfg.steps + 1, cfg.seed);
    let (x0, y0) = data[0];
    let n = cfg.budgets.len();
    let mut fast_all = vec![Vec::with_capacity(cfg.rounds * cfg.steps); n];
    let mut slow_all = vec![Vec::with_capacity(cfg.rounds * cfg.steps); n];
    let mut rmed = vec![f64::INFINITY; n];
    let mut bmed = vec![f64::INFINITY; n];
    // Each round sweeps every budget so a slow stretch of machine time is
    // confined to one round rather than one budget.
    for _ in 0..cfg.rounds {
        for (b, &p) in cfg.budgets.iter().enumerate() {
            let mut fast = StreamingModel::init(&x0, &y0, bench_config(p))?;
            let mut slow = RecomputingModel::init(&x0, &y0, bench_config(p))?;
            let mut t_fast = Vec::with_capacity(cfg.steps);
            let mut t_slow = Vec::with_capacity(cfg.steps);
            for (k, (x, y)) in data[1..].iter().enumerate() {
                let clock = Instant::now();
                fast.update(x, y)?;
                let a = clock.elapsed().as_secs_f64();
                let clock = Instant::now();
                slow.update(x, y)?;
                let c = clock.elapsed().as_secs_f64();
                if k >= cfg.warmup {
                    t_fast.push(a);
                    t_slow.push(c);
                }
            }
            rmed[b] = rmed[b].min(mean_median(&mut t_fast).1);
            bmed[b] = bmed[b].min(mean_median(&mut t_slow).1);
            fast_all[b].extend(t_fast);
            slow_all[b].extend(t_slow);
        }
    }
    let rows: Vec<BenchRow> = cfg
        .budgets
        .iter()
        .enumerate()
        .map(|(b, &p)| BenchRow {
            budget: p,
            recursive_mean_s: mean_median(&mut fast_all[b]).0,
            recursive_median_s: rmed[b],
            batch_mean_s: mean_median(&mut slow_all[b]).0,
            batch_median_s: bmed[b],
            speedup: bmed[b] / rmed[b],
        })
        .collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.budget as f64).collect();
    let fast: Vec<f64> = rows.iter().map(|r| r.recursive_median_s).collect();
    let slow: Vec<f64> = rows.iter().map(|r| r.batch_median_s).collect();
    Ok(BenchReport { steps: cfg.steps, recursive_slope: log_log_slope(&ps, &fast), batch_slope: log_log_slope(&ps, &slow), rows })
}
