use std::f64::consts::{FRAC_PI_4, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steerlab::channel::ChannelParams;
use steerlab::optics::{
    build_nonrwa_circuit, circuit_to_channel, closed_form_outputs, closed_form_params, synthesize_settings,
    CircuitSettings,
};
use steerlab::state::{Polarization, PhotonicState};
use steerlab::C64;

fn random_settings(rng: &mut ChaCha8Rng) -> CircuitSettings {
    let theta = [(); 4].map(|_| rng.random_range(0.0..=FRAC_PI_4));
    let phi = [(); 4].map(|_| rng.random_range(0.0..TAU));
    CircuitSettings::new(theta, phi).unwrap()
}

fn params_close(a: &ChannelParams, b: &ChannelParams) -> f64 {
    [
        (a.p - b.p).abs(),
        (a.q - b.q).abs(),
        (a.coherence_direct() - b.coherence_direct()).norm(),
        (a.coherence_swap() - b.coherence_swap()).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

#[test]
fn circuit_matches_closed_form_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = random_settings(&mut rng);
        let circuit = build_nonrwa_circuit(&s);
        let expected = closed_form_outputs(&s);
        for (pol, want) in [Polarization::H, Polarization::V].into_iter().zip(&expected) {
            let got = circuit.apply(&PhotonicState::basis(pol, 0)).unwrap();
            worst = worst.max(got.max_abs_diff(want));
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn circuit_channel_matches_closed_form_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let s = random_settings(&mut rng);
        let a = circuit_to_channel(&s).unwrap();
        let b = closed_form_params(&s).unwrap();
        assert!(params_close(&a, &b) <= 1e-12, "{s:?}");
    }
}

#[test]
fn synthesized_settings_realize_the_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let z1 = C64::from_polar(rng.random_range(0.0..=1.0), rng.random_range(-3.1..3.1));
        let z2 = C64::from_polar(rng.random_range(0.0..=1.0), rng.random_range(-3.1..3.1));
        let params = ChannelParams::new(0.0, rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0), Some(z1), Some(z2)).unwrap();
        let realized = circuit_to_channel(&synthesize_settings(&params).unwrap()).unwrap();
        worst = worst.max(params_close(&params, &realized));
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn identity_channel_synthesis() {
    let s = synthesize_settings(&ChannelParams::identity(0.0)).unwrap();
    assert_eq!(s.theta, [0.0, 0.0, 0.0, FRAC_PI_4]);
    assert!((s.phi[2] - std::f64::consts::PI).abs() < 1e-15);
    let back = circuit_to_channel(&s).unwrap();
    assert!(params_close(&back, &ChannelParams::identity(0.0)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn circuit_is_an_isometry(
        theta in prop::array::uniform4(0.0..=FRAC_PI_4),
        phi in prop::array::uniform4(0.0..TAU),
        a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
    ) {
        let norm = (a * a + b * b + c * c + d * d).sqrt();
        prop_assume!(norm > 1e-3);
        let qubit = [C64::new(a, b) / norm, C64::new(c, d) / norm];
        let s = CircuitSettings::new(theta, phi).unwrap();
        let out = build_nonrwa_circuit(&s).apply(&PhotonicState::encode(qubit, 0)).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn realized_channels_are_completely_positive(
        theta in prop::array::uniform4(0.0..=FRAC_PI_4),
        phi in prop::array::uniform4(0.0..TAU),
    ) {
        let s = CircuitSettings::new(theta, phi).unwrap();
        prop_assert!(circuit_to_channel(&s).unwrap().is_completely_positive());
    }
}
