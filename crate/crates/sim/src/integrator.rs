//! Fixed-step classical Runge–Kutta integration.

/// One RK4 step of `ẋ = f(x)` with step `dt`.
pub fn rk4_step<F>(f: &F, x: &[f64], dt: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let shifted = |base: &[f64], k: &[f64], h: f64| -> Vec<f64> { base.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let k1 = f(x);
    let k2 = f(&shifted(x, &k1, 0.5 * dt));
    let k3 = f(&shifted(x, &k2, 0.5 * dt));
    let k4 = f(&shifted(x, &k3, dt));
    x.iter()
        .enumerate()
        .map(|(i, &xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// `substeps` RK4 steps covering `period`.
pub fn integrate<F>(f: &F, x: &[f64], period: f64, substeps: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64> + ?Sized,
{
    let dt = period / substeps as f64;
    let mut state = x.to_vec();
    for _ in 0..substeps {
        state = rk4_step(f, &state, dt);
    }
    state
}
