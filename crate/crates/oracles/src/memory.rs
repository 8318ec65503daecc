//! Direct quadrature solution of `Ġ(t) = −∫₀ᵗ K(t − s) G(s) ds`, `G(0) = 1`.

use num_complex::Complex64 as C;

/// Trapezoidal product-integration scheme on the uniform grid `k·h`,
/// `k = 0..=steps`. Second order, O(steps²) work.
pub fn solve_memory(kernel: impl Fn(f64) -> C, h: f64, steps: usize) -> Vec<C> {
    let kv: Vec<C> = (0..=steps).map(|k| kernel(k as f64 * h)).collect();
    let mut g = Vec::with_capacity(steps + 1);
    g.push(C::new(1.0, 0.0));
    // F_n = ∫₀^{t_n} K(t_n − s) G(s) ds, trapezoidal
    let mut f_prev = C::new(0.0, 0.0);
    for n in 0..steps {
        let mut s = kv[n + 1] * g[0] * 0.5;
        for j in 1..=n {
            s += kv[n + 1 - j] * g[j];
        }
        s *= h;
        let denom = 1.0 + 0.25 * h * h * kv[0];
        let next = (g[n] - (f_prev + s) * (0.5 * h)) / denom;
        f_prev = s + kv[0] * next * (0.5 * h);
        g.push(next);
    }
    g
}

/// RWA survival amplitude (rotating frame) for the Lorentzian kernel
/// `(γλ/2) e^{−λτ}`, Richardson-extrapolated from step sizes `h` and `h/2`.
/// Output times are `k·h`.
pub fn survival_amplitude(gamma: f64, lambda: f64, h: f64, steps: usize) -> Vec<C> {
    let kernel = |tau: f64| C::new(0.5 * gamma * lambda * (-lambda * tau).exp(), 0.0);
    let coarse = solve_memory(kernel, h, steps);
    let fine = solve_memory(kernel, 0.5 * h, 2 * steps);
    coarse
        .iter()
        .enumerate()
        .map(|(k, c)| (fine[2 * k] * 4.0 - c) / 3.0)
        .collect()
}
