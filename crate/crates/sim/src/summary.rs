//! Scalar report computed from a trace alone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::trace::SimTrace;

/// Time windows for the windowed statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryWindows {
    /// Tracking RMS uses `t > tracking_start`.
    pub tracking_start: f64,
    /// Steady-state active fraction uses `t ≥ steady_state_start`.
    pub steady_state_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: usize,
    pub duration: f64,
    pub min_psi0: Option<f64>,
    pub min_psi1: Option<f64>,
    /// Constraint value at the applied control.
    pub min_psi: f64,
    /// Minimum of every barrier component column.
    pub component_minima: BTreeMap<String, f64>,
    /// Count of `(step, entry)` pairs with `|μ − w| > φ`.
    pub bound_violations: usize,
    /// `max |μ − w| / φ` over all steps and entries.
    pub max_bound_ratio: f64,
    pub tracking_rms: Option<f64>,
    pub tracking_start: f64,
    pub active_fraction: f64,
    pub steady_state_active_fraction: Option<f64>,
    pub steady_state_start: f64,
    /// Final tip distance to the last goal, when the trace has goal columns.
    pub final_goal_distance: Option<f64>,
}

fn is_component(name: &str) -> bool {
    name.starts_with("obstacle_") || name.starts_with("lifted_") || name == "wall" || name.ends_with("_bound")
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

impl Summary {
    pub fn from_trace(trace: &SimTrace, windows: SummaryWindows) -> Self {
        let t = trace.column("t").unwrap_or_default();
        let duration = match (t.first(), t.last()) {
            (Some(a), Some(b)) if t.len() > 1 => (b - a) * t.len() as f64 / (t.len() - 1) as f64,
            _ => 0.0,
        };
        let col_min = |name: &str| trace.column(name).map(|c| min_of(&c));

        let component_minima = trace
            .columns()
            .iter()
            .filter(|c| is_component(c))
            .map(|c| (c.clone(), col_min(c).unwrap_or(f64::NAN)))
            .collect();

        let mut bound_violations = 0;
        let mut max_bound_ratio: f64 = 0.0;
        for name in trace.columns().iter().filter(|c| c.starts_with("abs_err_")) {
            let suffix = &name["abs_err_".len()..];
            let (Some(err), Some(phi)) = (trace.column(name), trace.column(&format!("phi_{suffix}"))) else {
                continue;
            };
            for (e, p) in err.iter().zip(&phi) {
                if e > p {
                    bound_violations += 1;
                }
                let ratio = if *p > 0.0 { e / p } else if *e > 0.0 { f64::INFINITY } else { 0.0 };
                max_bound_ratio = max_bound_ratio.max(ratio);
            }
        }

        let tracking_rms = trace.column("tracking_error").and_then(|e| {
            let tail: Vec<f64> = e.iter().zip(&t).filter(|(_, &ti)| ti > windows.tracking_start).map(|(v, _)| *v).collect();
            (!tail.is_empty()).then(|| (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt())
        });

        let active = trace.column("active").unwrap_or_default();
        let fraction = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().filter(|&&a| a > 0.5).count() as f64 / v.len() as f64 };
        let steady: Vec<f64> =
            active.iter().zip(&t).filter(|(_, &ti)| ti >= windows.steady_state_start).map(|(a, _)| *a).collect();

        let final_goal_distance = match (trace.rows().last(), trace.index("q_x"), trace.index("q_y"), trace.index("goal_x"), trace.index("goal_y")) {
            (Some(r), Some(a), Some(b), Some(c), Some(d)) => Some(((r[a] - r[c]).powi(2) + (r[b] - r[d]).powi(2)).sqrt()),
            _ => None,
        };

        Self {
            rows: trace.len(),
            duration,
            min_psi0: col_min("psi0"),
            min_psi1: col_min("psi1"),
            min_psi: col_min("psi").unwrap_or(f64::NAN),
            component_minima,
            bound_violations,
            max_bound_ratio,
            tracking_rms,
            tracking_start: windows.tracking_start,
            active_fraction: fraction(&active),
            steady_state_active_fraction: (!steady.is_empty()).then(|| fraction(&steady)),
            steady_state_start: windows.steady_state_start,
            final_goal_distance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
