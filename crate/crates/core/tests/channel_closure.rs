use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steerlab::channel::{apply_channel, extract_channel_params, Picture};
use steerlab::heom::{evolve_with, BathSpectrum, HeomOptions, SystemHamiltonian};
use steerlab::DensityMatrix;

fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    loop {
        let r = [(); 3].map(|_| rng.random_range(-1.0..=1.0));
        if r.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return DensityMatrix::from_bloch(r).unwrap();
        }
    }
}

#[test]
fn extracted_channel_reproduces_direct_evolution() {
    let spec = BathSpectrum::new(2.5, 0.05).unwrap();
    let h = SystemHamiltonian::non_rwa();
    let grid: Vec<f64> = (0..=200).map(|k| 0.1 * k as f64).collect();
    let opts = HeomOptions::default();
    let run = |rho: &DensityMatrix| evolve_with(&spec, &h, rho, &grid, &opts).unwrap().trajectory;
    let params = extract_channel_params(
        &run(&DensityMatrix::excited()),
        &run(&DensityMatrix::ground()),
        &run(&DensityMatrix::plus()),
        &run(&DensityMatrix::plus_i()),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let rho0 = random_state(&mut rng);
        let direct = run(&rho0);
        for (p, s) in params.iter().zip(&direct.states) {
            let mapped = apply_channel(p, &rho0).unwrap();
            assert!(mapped.trace_distance(s) < 2e-6, "t={}", p.time);
        }
    }
}

#[test]
fn pictures_agree_on_populations() {
    let spec = BathSpectrum::new(2.5, 0.05).unwrap();
    let grid: Vec<f64> = (0..=50).map(|k| 0.2 * k as f64).collect();
    let opts = HeomOptions::default();
    let h = SystemHamiltonian::rwa();
    let run = |rho: &DensityMatrix| evolve_with(&spec, &h, rho, &grid, &opts).unwrap().trajectory;
    let params = extract_channel_params(
        &run(&DensityMatrix::excited()),
        &run(&DensityMatrix::ground()),
        &run(&DensityMatrix::plus()),
        &run(&DensityMatrix::plus_i()),
    )
    .unwrap();
    for p in &params {
        let i = p.in_picture(Picture::Interaction, 1.0);
        assert_eq!((i.p, i.q), (p.p, p.q));
        assert!((i.coherence_direct().norm() - p.coherence_direct().norm()).abs() < 1e-14);
        // RWA keeps the channel phase-covariant
        assert!(p.coherence_swap().norm() < 1e-6);
    }
}
