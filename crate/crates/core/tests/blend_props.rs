use proptest::prelude::*;
use safegp_core::{xi, xi_derivative, BlendSchedule, BlendedModel, BoundedEstimate, Estimator, Result};

#[test]
fn xi_is_nondecreasing_on_a_dense_grid() {
    let eta = 10.0;
    let mut prev = xi(-0.01f64, eta);
    for k in 0..=10_000 {
        let t = -0.01 + k as f64 * 1.2e-5;
        let v = xi(t, eta);
        assert!(v >= prev, "decrease at t = {t}");
        assert!((0.0..=1.0).contains(&v));
        prev = v;
    }
}

#[test]
fn xi_seams_are_flat() {
    for eta in [1.0f64, 4.0, 10.0] {
        let h = 1e-7;
        let end = 1.0 / eta;
        let right_of_zero = (xi(h, eta) - xi(0.0, eta)) / h;
        let left_of_end = (xi(end, eta) - xi(end - h, eta)) / h;
        assert!(right_of_zero.abs() <= 1e-6, "{right_of_zero}");
        assert!(left_of_end.abs() <= 1e-6, "{left_of_end}");
        assert_eq!(xi_derivative(0.0, eta), 0.0);
        assert!(xi_derivative(end * (1.0 - 1e-9), eta).abs() < 1e-6);
        assert!((xi(end / 2.0, eta) - 0.5).abs() < 1e-15);
    }
}

#[test]
fn xi_derivative_matches_finite_differences() {
    let eta = 10.0f64;
    for k in 1..100 {
        let t = k as f64 * 1e-3;
        let fd = (xi(t + 1e-8, eta) - xi(t - 1e-8, eta)) / 2e-8;
        assert!((xi_derivative(t, eta) - fd).abs() < 1e-5);
    }
}

#[derive(Clone)]
struct Affine {
    mean: [f64; 2],
    phi: [f64; 2],
}

impl Estimator<f64> for Affine {
    fn estimate(&self, x: &[f64]) -> Result<BoundedEstimate<f64>> {
        Ok(BoundedEstimate {
            mean: self.mean.iter().map(|m| m + x[0]).collect(),
            sigma: 1.0,
            bound_factor: self.phi.to_vec(),
            phi: self.phi.to_vec(),
            clamped_entries: 0,
        })
    }
}

proptest! {
    #[test]
    fn blend_is_a_convex_combination(
        a in prop::array::uniform2(-5.0..5.0f64),
        b in prop::array::uniform2(-5.0..5.0f64),
        pa in prop::array::uniform2(0.0..5.0f64),
        pb in prop::array::uniform2(0.0..5.0f64),
        frac in 0.0..1.0f64,
        x in -1.0..1.0f64,
    ) {
        let ts = 1e-3;
        let sched = BlendSchedule::new(10.0, ts).unwrap();
        let mut m = BlendedModel::new(Affine { mean: a, phi: pa }, 0.0, sched);
        m.swap(Affine { mean: b, phi: pb }, 0.5);
        let t = 0.5 + frac * ts * 0.999;
        let (mu, phi) = m.blended(t, &[x]).unwrap();
        let w = xi((t - 0.5) / ts, 10.0);
        for i in 0..2 {
            let (lo, hi) = ((a[i] + x).min(b[i] + x), (a[i] + x).max(b[i] + x));
            prop_assert!(mu[i] >= lo - 1e-12 && mu[i] <= hi + 1e-12);
            prop_assert!(phi[i] >= pa[i].min(pb[i]) - 1e-12 && phi[i] <= pa[i].max(pb[i]) + 1e-12);
            prop_assert!((mu[i] - (w * (b[i] + x) + (1.0 - w) * (a[i] + x))).abs() <= 1e-12);
            prop_assert!((phi[i] - (w * pb[i] + (1.0 - w) * pa[i])).abs() <= 1e-12);
        }
    }
}

#[test]
fn half_way_through_the_ramp() {
    let sched = BlendSchedule::new(10.0, 1e-3).unwrap();
    let mut m = BlendedModel::new(Affine { mean: [0.0, 2.0], phi: [1.0, 1.0] }, 0.0, sched);
    m.swap(Affine { mean: [4.0, 6.0], phi: [3.0, 5.0] }, 1.0);
    let (mu, phi) = m.blended(1.0 + 1e-3 / 20.0, &[0.0]).unwrap();
    assert!((mu[0] - 2.0).abs() < 1e-9 && (mu[1] - 4.0).abs() < 1e-9);
    assert!((phi[0] - 2.0).abs() < 1e-9 && (phi[1] - 3.0).abs() < 1e-9);
}

#[test]
fn step_zero_blend_is_the_first_model() {
    let sched = BlendSchedule::new(10.0, 1e-3).unwrap();
    let m = BlendedModel::new(Affine { mean: [1.0, 1.0], phi: [0.5, 0.25] }, 0.0, sched);
    for k in 0..10 {
        let t = k as f64 * 1e-4;
        assert_eq!(m.blended_phi(t, &[0.0]).unwrap(), vec![0.5, 0.25]);
    }
}
