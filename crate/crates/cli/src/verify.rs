use std::f64::consts::{FRAC_PI_4, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use steerlab::channel::ChannelParams;
use steerlab::heom::{evolve_with, rwa_analytic_state, BathSpectrum, SystemHamiltonian};
use steerlab::optics::{build_nonrwa_circuit, closed_form_outputs, closed_form_params, CircuitSettings};
use steerlab::state::{PhotonicState, Polarization};
use steerlab::steering::GAP_TOLERANCE;
use steerlab::tomography::stream_rng;
use steerlab::DensityMatrix;

use crate::config::ScenarioConfig;
use crate::sweep::{heom_options, run_sweep, SweepParts, SweepResult};
use crate::CliError;

pub const REPORT_SCHEMA: &str = "steerlab.verify/1";
pub const RWA_TOLERANCE: f64 = 1e-6;
pub const CIRCUIT_TOLERANCE: f64 = 1e-12;
pub const ROUNDTRIP_TOLERANCE: f64 = 1e-10;
const CIRCUIT_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    fn bound(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
            detail,
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed: false,
            value: None,
            tolerance: None,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: &'static str,
    pub scenario: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data") + "\n"
    }
}

fn rwa_equivalence(cfg: &ScenarioConfig) -> Check {
    const NAME: &str = "rwa_analytic_equivalence";
    let spec = match BathSpectrum::new(cfg.gamma, cfg.lambda_width) {
        Ok(s) => s,
        Err(e) => return Check::failed(NAME, e.to_string()),
    };
    let grid = cfg.grid();
    let opts = heom_options(cfg);
    let starts = [DensityMatrix::excited(), DensityMatrix::plus(), DensityMatrix::plus_i()];
    let worst: Result<Vec<f64>, String> = starts
        .par_iter()
        .map(|rho0| {
            let run = evolve_with(&spec, &SystemHamiltonian::rwa(), rho0, &grid, &opts).map_err(|e| e.to_string())?;
            Ok(run
                .trajectory
                .states
                .iter()
                .zip(&grid)
                .map(|(s, &t)| s.matrix().max_abs_diff(&rwa_analytic_state(&spec, rho0, t)))
                .fold(0.0, f64::max))
        })
        .collect();
    match worst {
        Ok(w) => Check::bound(
            NAME,
            w.into_iter().fold(0.0, f64::max),
            RWA_TOLERANCE,
            "max element deviation of hierarchy vs analytic G(t) channel".into(),
        ),
        Err(e) => Check::failed(NAME, e),
    }
}

fn circuit_closed_form(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..CIRCUIT_SAMPLES {
        let theta = [(); 4].map(|_| rng.random_range(0.0..=FRAC_PI_4));
        let phi = [(); 4].map(|_| rng.random_range(0.0..TAU));
        let s = CircuitSettings::new(theta, phi).expect("sampled in range");
        let circuit = build_nonrwa_circuit(&s);
        for (pol, want) in [Polarization::H, Polarization::V].into_iter().zip(&closed_form_outputs(&s)) {
            match circuit.apply(&PhotonicState::basis(pol, 0)) {
                Ok(got) => worst = worst.max(got.max_abs_diff(want)),
                Err(e) => return Check::failed("circuit_closed_form", e.to_string()),
            }
        }
    }
    Check::bound(
        "circuit_closed_form",
        worst,
        CIRCUIT_TOLERANCE,
        format!("{CIRCUIT_SAMPLES} random settings, max output amplitude error"),
    )
}

pub fn params_distance(a: &ChannelParams, b: &ChannelParams) -> f64 {
    [
        (a.p - b.p).abs(),
        (a.q - b.q).abs(),
        (a.coherence_direct() - b.coherence_direct()).norm(),
        (a.coherence_swap() - b.coherence_swap()).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

fn sweep_checks(result: &SweepResult) -> Vec<Check> {
    let mut checks = Vec::new();
    if let Some(h) = result.heom {
        checks.push(Check::bound(
            "heom_tier_convergence",
            h.tier_discrepancy,
            heom_options(&result.config).convergence_tolerance,
            format!("tier {} vs tier {}", h.tier_cap, h.tier_cap + 2),
        ));
    }
    let cp_bad = result.rows.iter().filter(|r| !r.params.is_completely_positive()).count();
    checks.push(Check {
        name: "channel_complete_positivity".into(),
        passed: cp_bad == 0,
        value: Some(cp_bad as f64),
        tolerance: Some(0.0),
        detail: "grid times with a non-positive Choi matrix".into(),
    });
    let mut roundtrip = 0.0f64;
    for r in &result.rows {
        match closed_form_params(&r.settings) {
            Ok(p) => roundtrip = roundtrip.max(params_distance(&p, &r.params)),
            Err(e) => {
                checks.push(Check::failed("synthesis_roundtrip", format!("t={}: {e}", r.time)));
                roundtrip = f64::NAN;
                break;
            }
        }
    }
    if !roundtrip.is_nan() {
        checks.push(Check::bound(
            "synthesis_roundtrip",
            roundtrip,
            ROUNDTRIP_TOLERANCE,
            "channel -> settings -> channel".into(),
        ));
    }
    let steering: Vec<_> = result.rows.iter().filter_map(|r| r.steering.as_ref()).collect();
    let gap = steering.iter().map(|s| s.gap).fold(0.0, f64::max);
    checks.push(Check::bound("sdp_duality_gap", gap, GAP_TOLERANCE, "max certified gap".into()));
    let out_of_range = steering.iter().filter(|s| !(0.0..=1.0).contains(&s.weight)).count();
    checks.push(Check {
        name: "weight_range".into(),
        passed: out_of_range == 0,
        value: Some(out_of_range as f64),
        tolerance: Some(0.0),
        detail: "grid times with W_TS outside [0, 1]".into(),
    });
    let inconsistent = steering
        .iter()
        .filter(|s| s.s_n.value > 1.0 + 1e-6 && s.weight <= 0.0)
        .count();
    checks.push(Check {
        name: "ts_parameter_implies_weight".into(),
        passed: inconsistent == 0,
        value: Some(inconsistent as f64),
        tolerance: Some(0.0),
        detail: "grid times with S2 > 1 but W_TS = 0".into(),
    });
    checks
}

/// Runs the oracle suite for a scenario. Never fails outright: problems
/// show up as failed checks.
pub fn run_verify(cfg: &ScenarioConfig) -> VerifyReport {
    let mut checks = vec![rwa_equivalence(cfg), circuit_closed_form(cfg.shot_noise.map_or(0, |n| n.seed))];
    let parts = SweepParts {
        steering: true,
        noisy: false,
    };
    match run_sweep(cfg, parts) {
        Ok(result) => checks.extend(sweep_checks(&result)),
        Err(CliError::Numerical { stage, time, message }) => {
            let name = if stage == "heom" { "heom_tier_convergence" } else { "scenario_sweep" };
            let at = time.map(|t| format!(" at t={t}")).unwrap_or_default();
            checks.push(Check::failed(name, format!("{stage}{at}: {message}")));
        }
        Err(e) => checks.push(Check::failed("scenario_sweep", e.to_string())),
    }
    VerifyReport {
        schema: REPORT_SCHEMA,
        scenario: cfg.describe(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
