use num_complex::Complex64 as C;
use oracles::bath::{correlation_quadrature, discrete_bath_evolution, DiscreteBathConfig, Lorentz};
use oracles::memory::survival_amplitude;
use oracles::pseudomode::Pseudomode;
use steerlab::heom::{
    bath_correlation, evolve_rwa, evolve_with, rwa_analytic_state, rwa_survival_amplitude, BathSpectrum,
    HeomOptions, SystemHamiltonian,
};
use steerlab::DensityMatrix;

fn spec() -> BathSpectrum {
    BathSpectrum::new(2.5, 0.05).unwrap()
}

fn max_dev(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> f64 {
    let mut d = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            d = d.max((a[r][c] - b[r][c]).norm());
        }
    }
    d
}

#[test]
fn rwa_hierarchy_matches_analytic_channel() {
    let grid: Vec<f64> = (0..400).map(|k| 40.0 * k as f64 / 399.0).collect();
    let starts = [
        DensityMatrix::excited(),
        DensityMatrix::plus(),
        DensityMatrix::plus_i(),
        DensityMatrix::from_bloch([0.3, -0.5, 0.2]).unwrap(),
    ];
    for rho0 in starts {
        let traj = evolve_rwa(&spec(), &rho0, &grid).unwrap();
        let worst = traj
            .states
            .iter()
            .zip(&grid)
            .map(|(s, &t)| s.matrix().max_abs_diff(&rwa_analytic_state(&spec(), &rho0, t)))
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{rho0:?}: {worst:e}");
    }
}

#[test]
fn survival_amplitude_matches_memory_kernel_quadrature() {
    let h = 0.01;
    let g = survival_amplitude(2.5, 0.05, h, 2000);
    for (k, gk) in g.iter().enumerate().step_by(50) {
        let ours = rwa_survival_amplitude(&spec(), k as f64 * h);
        assert!((ours - gk).norm() < 1e-6, "t={}: {ours} vs {gk}", k as f64 * h);
    }
}

#[test]
fn correlation_matches_spectral_quadrature() {
    let bath = Lorentz::new(2.5, 0.05);
    for t in [0.0, 1.3, 6.0] {
        let ours = bath_correlation(&spec(), t).unwrap();
        let reference = correlation_quadrature(&bath, t, 400.0, 2_000_000);
        assert!((ours - reference).norm() < 1e-5, "t={t}: {ours} vs {reference}");
    }
}

#[test]
fn non_rwa_hierarchy_matches_pseudomode() {
    let grid: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
    let mode = Pseudomode::new(2.5, 0.05, 1.0, false, 12);
    for rho0 in [DensityMatrix::excited(), DensityMatrix::plus()] {
        let run = evolve_with(&spec(), &SystemHamiltonian::non_rwa(), &rho0, &grid, &HeomOptions::default()).unwrap();
        let reference = mode.evolve(&rho0.matrix().0, &grid, 0.002);
        let worst = run
            .trajectory
            .states
            .iter()
            .zip(&reference)
            .map(|(s, r)| max_dev(&s.matrix().0, r))
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "{rho0:?}: {worst:e}");
    }
}

#[test]
fn non_rwa_population_matches_discretized_bath() {
    let grid: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
    let run = evolve_with(
        &spec(),
        &SystemHamiltonian::non_rwa(),
        &DensityMatrix::excited(),
        &grid,
        &HeomOptions::default(),
    )
    .unwrap();
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let reference = discrete_bath_evolution(&Lorentz::new(2.5, 0.05), false, [one, zero], &grid, &DiscreteBathConfig::default());
    let worst = run
        .trajectory
        .states
        .iter()
        .zip(&reference)
        .map(|(s, r)| (s.rho(0, 0).re - r[0][0].re).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst:e}");
}
