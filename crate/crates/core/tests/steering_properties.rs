use std::f64::consts::{FRAC_PI_4, TAU};

use proptest::prelude::*;
use steerlab::channel::{phase_damping_channel, ChannelParams};
use steerlab::optics::{closed_form_params, CircuitSettings};
use steerlab::steering::{
    assemblage_from_channel, solve_sdp, ts_parameter, ts_weight, Assemblage, Lmi, MeasurementSet, SdpProblem,
};
use steerlab::{DensityMatrix, Mat2, C64};

fn channel(theta: [f64; 4], phi: [f64; 4]) -> ChannelParams {
    closed_form_params(&CircuitSettings::new(theta, phi).unwrap()).unwrap()
}

fn settings() -> impl Strategy<Value = ([f64; 4], [f64; 4])> {
    (
        prop::array::uniform4(0.0..=FRAC_PI_4),
        prop::array::uniform4(0.0..TAU),
    )
}

fn unsteerable(meas: &MeasurementSet) -> Assemblage {
    let half = Mat2::diag(0.25, 0.25);
    Assemblage::new(vec![[half, half]; meas.len()]).unwrap()
}

#[test]
fn identity_assemblage_is_maximally_steerable() {
    let meas = MeasurementSet::xz();
    let a = assemblage_from_channel(&ChannelParams::identity(0.0), &meas).unwrap();
    for (i, pair) in a.members().iter().enumerate() {
        let [plus, minus] = meas.eigenstates(i);
        assert!(pair[0].max_abs_diff(&plus.matrix().scale_re(0.5)) < 1e-12);
        assert!(pair[1].max_abs_diff(&minus.matrix().scale_re(0.5)) < 1e-12);
    }
    assert!((ts_parameter(&a, &meas).unwrap().value - 2.0).abs() < 1e-12);
    assert!((ts_weight(&a).unwrap().0 - 1.0).abs() < 1e-6);
}

#[test]
fn full_dephasing_erases_the_x_assemblage() {
    let meas = MeasurementSet::xz();
    let a = assemblage_from_channel(&phase_damping_channel(0.0).unwrap(), &meas).unwrap();
    let id = assemblage_from_channel(&ChannelParams::identity(0.0), &meas).unwrap();
    let z = (0..2)
        .position(|i| meas.bob()[i].max_abs_diff(&Mat2::pauli_z()) < 1e-12)
        .unwrap();
    let x = 1 - z;
    for k in 0..2 {
        assert!(a.members()[z][k].max_abs_diff(&id.members()[z][k]) < 1e-12);
        assert!(a.members()[x][k].max_abs_diff(&Mat2::diag(0.25, 0.25)) < 1e-12);
    }
    let s = ts_parameter(&a, &meas).unwrap();
    assert!((s.value - 1.0).abs() < 1e-12);
    assert!(ts_weight(&a).unwrap().0 < 1e-8);
}

#[test]
fn weight_decreases_along_mixing_path() {
    for meas in [MeasurementSet::xz(), MeasurementSet::xy()] {
        let id = assemblage_from_channel(&ChannelParams::identity(0.0), &meas).unwrap();
        let noise = unsteerable(&meas);
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let a = id.mix(&noise, k as f64 / 19.0).unwrap();
            let (w, _) = ts_weight(&a).unwrap();
            assert!(w <= last + 1e-6, "step {k}: {w} after {last}");
            last = w;
        }
        assert!(last < 1e-8);
    }
}

#[test]
fn single_variable_sdp_matches_closed_form() {
    // max Tr(C X) over 0 ⪯ X ⪯ G equals the positive spectral mass of G^½ C G^½
    let cases = [
        (Mat2::from_real(0.7, 0.2, 0.2, -0.4), Mat2::from_real(1.0, 0.3, 0.3, 0.5)),
        (
            Mat2([[C64::new(0.1, 0.0), C64::new(0.4, -0.3)], [C64::new(0.4, 0.3), C64::new(0.2, 0.0)]]),
            Mat2::from_real(0.6, -0.1, -0.1, 0.9),
        ),
        (Mat2::from_real(-1.0, 0.0, 0.0, -0.5), Mat2::diag(1.0, 1.0)),
    ];
    for (c, g) in cases {
        let root = g.hermitian_fn(f64::sqrt);
        let (ev, _) = (root * c * root).eig_hermitian();
        let expected: f64 = ev.iter().filter(|&&e| e > 0.0).sum();
        let problem = SdpProblem::new(vec![c], vec![Lmi::new(g, vec![(0, 1.0)])]);
        let sol = solve_sdp(&problem).unwrap();
        assert!((sol.primal_value - expected).abs() < 1e-6, "{} vs {expected}", sol.primal_value);
        assert!(sol.gap < 1e-6);
        // no grid point inside the feasible set beats the solver
        let n = 12;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    for l in 0..=n {
                        let t = 2.0 * i as f64 / n as f64;
                        let r = [j, k, l].map(|v| 2.0 * v as f64 / n as f64 - 1.0);
                        let x = (Mat2::diag(t, t)
                            + Mat2::pauli_x().scale_re(r[0])
                            + Mat2::pauli_y().scale_re(r[1])
                            + Mat2::pauli_z().scale_re(r[2]))
                        .scale_re(0.5);
                        if x.min_eigenvalue() >= 0.0 && (g - x).min_eigenvalue() >= 0.0 {
                            best = best.max(c.trace_product_re(&x));
                        }
                    }
                }
            }
        }
        assert!(best <= sol.primal_value + 1e-6);
        assert!(best >= sol.primal_value - 0.25);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channel_assemblages_obey_the_invariants((theta, phi) in settings(), xy in any::<bool>()) {
        let meas = if xy { MeasurementSet::xy() } else { MeasurementSet::xz() };
        let params = channel(theta, phi);
        let a = assemblage_from_channel(&params, &meas).unwrap();

        let marginal = a.members()[0][0] + a.members()[0][1];
        for pair in a.members() {
            prop_assert!((pair[0] + pair[1]).max_abs_diff(&marginal) < 1e-12);
        }

        let s = ts_parameter(&a, &meas).unwrap();
        prop_assert!(s.value >= -1e-12 && s.value <= 2.0 + 1e-12);
        // every conditioned state is shorter than 1 along B_i
        let short = (0..meas.len()).any(|i| {
            (0..2).any(|k| {
                let p = a.probabilities()[i][k];
                (meas.bob()[i].trace_product_re(&a.members()[i][k]) / p).abs() < 1.0 - 1e-3
            })
        });
        if short {
            prop_assert!(s.value < 2.0 - 1e-6);
        }

        let (w, sol) = ts_weight(&a).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&w));
        prop_assert!(sol.gap >= -1e-12 && sol.gap <= 1e-6, "gap {}", sol.gap);
        if s.value > 1.0 + 1e-6 {
            prop_assert!(w > 0.0, "S2 {} but W {w}", s.value);
        }

        let (w_flipped, _) = ts_weight(&a.relabeled(&[true, false])).unwrap();
        prop_assert!((w - w_flipped).abs() <= 1e-6);
    }

    #[test]
    fn hidden_state_assemblages_are_unsteerable(
        bloch in prop::array::uniform3(-0.55..0.55f64),
        weights in prop::array::uniform2(0.05..0.95f64),
    ) {
        // σ_a|i built from two hidden states with deterministic responses
        let rho = DensityMatrix::from_bloch(bloch).unwrap();
        let alt = DensityMatrix::from_bloch([-bloch[1], bloch[2], -bloch[0]]).unwrap();
        let (u, v) = (rho.matrix().scale_re(0.5), alt.matrix().scale_re(0.5));
        let members = weights
            .iter()
            .map(|&s| [u.scale_re(s) + v.scale_re(1.0 - s), u.scale_re(1.0 - s) + v.scale_re(s)])
            .collect();
        let (w, _) = ts_weight(&Assemblage::new(members).unwrap()).unwrap();
        prop_assert!(w < 1e-6, "{w}");
    }
}
