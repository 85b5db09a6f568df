use std::f64::consts::FRAC_PI_4;

use proptest::prelude::*;

use safegp_core::{Barrier, ControlAffine};
use safegp_sim::config::{PendulumConfig, RobotConfig, RunConfig};
use safegp_sim::integrator::integrate;
use safegp_sim::pendulum::{AngleBarrier, Pendulum};
use safegp_sim::robot::Robot;
use safegp_sim::scenario::{case_wiring, Case, Scenario};

fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[i] += h;
            b[i] -= h;
            (f(&a) - f(&b)) / (2.0 * h)
        })
        .collect()
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pendulum_barrier_gradient(g in -1.5f64..1.5, gd in -5.0f64..5.0) {
        let b = AngleBarrier { alpha0: 200.0 };
        let x = [g, gd];
        let fd = central_diff(&|z| b.value(z), &x, 1e-6);
        prop_assert!(rel_gap(&b.gradient(&x), &fd) <= 1e-4);
    }

    #[test]
    fn robot_barrier_gradient(
        qx in -0.9f64..3.9, qy in -0.9f64..2.9, gamma in -3.2f64..3.2,
        v in -1.0f64..1.0, w in -1.0f64..1.0,
    ) {
        let r = Robot::new(&RobotConfig::default()).unwrap();
        let x = [qx, qy, gamma, v, w];
        let fd = central_diff(&|z| r.barrier.value(z), &x, 1e-6);
        prop_assert!(rel_gap(&r.barrier.gradient(&x), &fd) <= 1e-4);
    }

    #[test]
    fn robot_mixing_inverts_gains(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        let r = Robot::new(&RobotConfig::default()).unwrap();
        let [ur, ul] = r.mix(a, b);
        let g = r.dynamics.input_matrix(&[0.0; 5]);
        prop_assert!((g[(3, 0)] * ur + g[(3, 1)] * ul - a).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!((g[(4, 0)] * ur + g[(4, 1)] * ul - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn pendulum_friction_is_odd(g in -2.0f64..2.0, gd in -6.0f64..6.0) {
        let p = Pendulum::new(&PendulumConfig::default()).unwrap();
        let a = p.uncertainty.w2(&[g, gd]);
        let b = p.uncertainty.w2(&[-g, -gd]);
        prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn dynamics_are_locally_lipschitz(
        qx in -1.0f64..4.0, qy in -1.0f64..3.0, gamma in -3.2f64..3.2, v in -1.0f64..1.0, w in -1.0f64..1.0,
    ) {
        let r = Robot::new(&RobotConfig::default()).unwrap();
        let x = [qx, qy, gamma, v, w];
        let u = [1.0, -0.5];
        for i in 0..5 {
            let mut y = x;
            y[i] += 1e-6;
            let (a, b) = (r.vector_field(&x, &u), r.vector_field(&y, &u));
            let slope = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) / 1e-6;
            prop_assert!(slope < 100.0);
        }
    }
}

#[test]
fn pendulum_examples() {
    let p = Pendulum::new(&PendulumConfig::default()).unwrap();
    assert_eq!(p.vector_field(&[0.0, 0.0], &[0.0]), vec![0.0, 0.0]);
    let h = std::f64::consts::FRAC_PI_2;
    let expected = 9.81 / 0.15 + (-0.5 * h - 0.35 * h.powi(3)) / (0.5 * 0.15 * 0.15);
    assert!((p.vector_field(&[h, 0.0], &[0.0])[1] - expected).abs() < 1e-12);
    assert!((AngleBarrier { alpha0: 200.0 }.value(&[0.0, 0.0]) - 200.0 * FRAC_PI_4 * FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn robot_examples() {
    let r = Robot::new(&RobotConfig::default()).unwrap();
    assert_eq!(r.vector_field(&[0.0; 5], &[0.0, 0.0]), vec![0.0; 5]);
    let rest = r.vector_field(&[0.0; 5], &[1.0, 1.0]);
    assert!((rest[3] - 2.0 * 0.1 / (10.0 * 0.1 * 0.27)).abs() < 1e-12);
    assert!((rest[3] - 0.7407).abs() < 1e-4);
    let up = r.vector_field(&[0.0, 0.0, std::f64::consts::FRAC_PI_2, 0.0, 0.0], &[0.0, 0.0]);
    assert!((up[3] + 4.905).abs() < 1e-12);
    assert!(r.barrier.value(&[1.5, 1.0, 0.0, 0.0, 0.0]) > 0.0);
}

#[test]
fn wiring_cases() {
    let (live_m, live_p, init_m, init_p) = ([1.0], [2.0], [3.0], [4.0]);
    let w = case_wiring(Case::Adaptive, &live_m, &live_p, &init_m, &init_p);
    assert_eq!((w.constraint_mean, w.constraint_bound, w.desired_mean), (&live_m[..], &live_p[..], &live_m[..]));
    let w = case_wiring(Case::FrozenDesired, &live_m, &live_p, &init_m, &init_p);
    assert_eq!((w.constraint_mean, w.constraint_bound, w.desired_mean), (&live_m[..], &live_p[..], &init_m[..]));
    let w = case_wiring(Case::FrozenConstraint, &live_m, &live_p, &init_m, &init_p);
    assert_eq!((w.constraint_mean, w.constraint_bound, w.desired_mean), (&init_m[..], &init_p[..], &live_m[..]));
    assert!(Case::from_id(4).is_err());
}

/// With `u = u_d(w)` and no saturation the tracking error obeys `ë + K₂ė + K₁e = 0`.
#[test]
fn pendulum_ideal_loop_matches_linear_error_dynamics() {
    let cfg = PendulumConfig { force_limit: 1e9, ..PendulumConfig::default() };
    let p = Pendulum::new(&cfg).unwrap();
    let (k1, k2) = (cfg.gain_position, cfg.gain_velocity);
    let disc = (k2 * k2 - 4.0 * k1).sqrt();
    let (s1, s2) = ((-k2 + disc) / 2.0, (-k2 - disc) / 2.0);
    let x0 = p.initial_state();
    let [gd0, gd_dot0, _] = p.reference.at(0.0);
    let (e0, e_dot0) = (x0[0] - gd0, x0[1] - gd_dot0);
    let c2 = (e_dot0 - s1 * e0) / (s2 - s1);
    let c1 = e0 - c2;
    // Time rides along as a third state so the control is evaluated continuously.
    let field = |z: &[f64]| {
        let u = p.desired_unsaturated(z[2], &z[..2], p.uncertainty.w2(&z[..2]));
        let mut d = p.vector_field(&z[..2], &[u]);
        d.push(1.0);
        d
    };
    let mut z = vec![x0[0], x0[1], 0.0];
    let mut worst: f64 = 0.0;
    for _ in 0..5000 {
        z = integrate(&field, &z, 1e-3, 10);
        let t = z[2];
        let predicted = c1 * (s1 * t).exp() + c2 * (s2 * t).exp();
        worst = worst.max((z[0] - p.reference.at(t)[0] - predicted).abs());
    }
    assert!(worst < 1e-6, "max deviation from the linear error solution {worst:e}");
}

/// With `u = u_d(w)`: `v̇ = −K₁v + a_d` and `ω̇ − ω̇_d = −K₂(ω − ω_d)`.
#[test]
fn robot_ideal_loop_identities() {
    let cfg = RobotConfig::default();
    let r = Robot::new(&cfg).unwrap();
    let (mu1, mu2, k1, k2, ld) = (cfg.mu1, cfg.mu2, cfg.gain_speed, cfg.gain_turn, cfg.tip_offset);
    let goal = cfg.waypoints[0];
    let omega_d = |x: &[f64]| {
        let (_, e2) = Robot::errors(x, goal);
        -mu1 / ld * e2
    };
    let dt = 1e-3;
    let mut x = r.initial_state();
    let mut worst_v: f64 = 0.0;
    let mut worst_w: f64 = 0.0;
    for _ in 0..3000 {
        let w = r.uncertainty(&x);
        let (a, b) = r.desired_accelerations(&x, goal, w[3], w[4]);
        let u = r.mix(a, b);
        let xd = r.vector_field(&x, &u);
        let (e1, e2) = Robot::errors(&x, goal);
        let a_d = -(mu1 + mu2) * x[3] - (1.0 + mu1 * mu2) * e1 + mu1 * mu1 / ld * e2 * e2;
        worst_v = worst_v.max((xd[3] - (-k1 * x[3] + a_d)).abs());
        // ω̇_d by central differences along the flow.
        let h = 1e-6;
        let ahead: Vec<f64> = x.iter().zip(&xd).map(|(p, q)| p + h * q).collect();
        let behind: Vec<f64> = x.iter().zip(&xd).map(|(p, q)| p - h * q).collect();
        let wd_dot = (omega_d(&ahead) - omega_d(&behind)) / (2.0 * h);
        worst_w = worst_w.max((xd[4] - wd_dot + k2 * (x[4] - omega_d(&x))).abs());
        x = integrate(&|z: &[f64]| r.vector_field(z, &u), &x, dt, 10);
    }
    assert!(worst_v < 1e-10, "{worst_v:e}");
    assert!(worst_w < 1e-6, "{worst_w:e}");
}

#[test]
fn run_config_defaults_build_every_scenario() {
    let cfg = RunConfig::default();
    for kind in ["pendulum", "robot", "synthetic"] {
        let s = safegp_sim::build_scenario(kind.parse().unwrap(), &cfg).unwrap();
        assert_eq!(s.kind().name(), kind);
        assert!(s.barrier().value(&s.initial_state()) > 0.0);
    }
}
