use rayon::prelude::*;
use steerlab::channel::{extract_channel_params, params_from_coherences, ChannelParams, Picture};
use steerlab::heom::{
    evolve_with, rwa_survival_amplitude, BathSpectrum, HeomOptions, HeomRun, SystemHamiltonian,
};
use steerlab::optics::{synthesize_settings, CircuitSettings};
use steerlab::steering::{steering_row, MeasurementSet, SteeringRow};
use steerlab::tomography::{
    reconstruct_with, simulate_counts, sub_seed, CountRecord, Estimator, ReconstructOptions, ReconstructionResult,
};
use steerlab::{DensityMatrix, C64};

use crate::config::{ChannelKind, ScenarioConfig, ShotNoise};
use crate::CliError;

/// Qubit frequency; times are measured in units of `1/ω₀`.
pub const OMEGA0: f64 = 1.0;

/// Tomography of one conditioned state `Φ(|a_i⟩⟨a_i|)`.
#[derive(Debug, Clone)]
pub struct ConditionedTomography {
    pub setting: usize,
    pub outcome: usize,
    pub seed: u64,
    pub counts: Vec<CountRecord>,
    pub reconstruction: ReconstructionResult,
}

/// `S₂` evaluated on reconstructed conditioned states.
#[derive(Debug, Clone)]
pub struct NoisyS2 {
    pub value: f64,
    pub stderr: f64,
    pub tomography: Vec<ConditionedTomography>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub time: f64,
    pub params: ChannelParams,
    pub settings: CircuitSettings,
    pub steering: Option<SteeringRow>,
    pub noisy: Option<NoisyS2>,
}

/// Truncation actually used by the hierarchy runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeomSummary {
    pub tier_cap: usize,
    pub tier_discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub config: ScenarioConfig,
    pub heom: Option<HeomSummary>,
    pub rows: Vec<SweepRow>,
}

pub fn heom_options(cfg: &ScenarioConfig) -> HeomOptions {
    let mut opts = HeomOptions::default();
    if let Some(cap) = cfg.tier_cap {
        // a forced cap is checked against cap + 2 but never escalated
        opts.tier_cap = cap;
        opts.max_tier = cap;
    }
    opts
}

fn numerical(stage: &str, time: Option<f64>, e: impl std::fmt::Display) -> CliError {
    CliError::Numerical {
        stage: stage.to_string(),
        time,
        message: e.to_string(),
    }
}

/// Channel parameters on the grid in the configured picture.
pub fn channel_trajectory(cfg: &ScenarioConfig) -> Result<(Vec<ChannelParams>, Option<HeomSummary>), CliError> {
    let grid = cfg.grid();
    let spec = || BathSpectrum::new(cfg.gamma, cfg.lambda_width).map_err(|e| numerical("bath", None, e));
    let (params, summary) = match cfg.channel_kind {
        ChannelKind::Identity => {
            // the identity is picture independent by construction
            return Ok((grid.iter().map(|&t| ChannelParams::identity(t)).collect(), None));
        }
        ChannelKind::Nonrwa | ChannelKind::Rwa => {
            let spec = spec()?;
            let h = if cfg.channel_kind == ChannelKind::Rwa {
                SystemHamiltonian::rwa()
            } else {
                SystemHamiltonian::non_rwa()
            };
            let opts = heom_options(cfg);
            let starts = [
                DensityMatrix::excited(),
                DensityMatrix::ground(),
                DensityMatrix::plus(),
                DensityMatrix::plus_i(),
            ];
            let runs: Vec<Result<HeomRun, _>> = starts
                .par_iter()
                .map(|rho0| evolve_with(&spec, &h, rho0, &grid, &opts))
                .collect();
            let runs = runs
                .into_iter()
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| numerical("heom", None, e))?;
            let summary = HeomSummary {
                tier_cap: runs.iter().map(|r| r.tier_cap).max().unwrap_or(opts.tier_cap),
                tier_discrepancy: runs.iter().map(|r| r.tier_discrepancy).fold(0.0, f64::max),
            };
            let params = extract_channel_params(
                &runs[0].trajectory,
                &runs[1].trajectory,
                &runs[2].trajectory,
                &runs[3].trajectory,
            )
            .map_err(|e| numerical("channel extraction", None, e))?;
            (params, Some(summary))
        }
        kind @ (ChannelKind::AmplitudeDamping | ChannelKind::PhaseDamping) => {
            let spec = spec()?;
            let params = grid
                .iter()
                .map(|&t| {
                    let g = rwa_survival_amplitude(&spec, t);
                    let rotation = C64::from_polar(1.0, -OMEGA0 * t);
                    let (q, a) = if kind == ChannelKind::AmplitudeDamping {
                        (g.norm_sqr(), g * rotation)
                    } else {
                        (1.0, rotation * g.norm())
                    };
                    params_from_coherences(t, 1.0, q, a, C64::new(0.0, 0.0))
                        .map_err(|e| numerical("analytic channel", Some(t), e))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (params, None)
        }
    };
    let params = match cfg.picture {
        Picture::Schrodinger => params,
        p => params.iter().map(|c| c.in_picture(p, OMEGA0)).collect(),
    };
    Ok((params, summary))
}

/// Simulated tomography of every conditioned state at grid index `k`, and
/// the `S₂` estimate built from it. The error bar propagates the bootstrap
/// standard errors of the Bloch components to first order.
pub fn noisy_s2(
    params: &ChannelParams,
    meas: &MeasurementSet,
    noise: &ShotNoise,
    k: usize,
) -> Result<NoisyS2, CliError> {
    let t = Some(params.time);
    let mut value = 0.0;
    let mut variance = 0.0;
    let mut tomography = Vec::with_capacity(2 * meas.len());
    for i in 0..meas.len() {
        let bob = meas.bob()[i];
        let b = [
            bob.trace_product_re(&steerlab::Mat2::pauli_x()) / 2.0,
            bob.trace_product_re(&steerlab::Mat2::pauli_y()) / 2.0,
            bob.trace_product_re(&steerlab::Mat2::pauli_z()) / 2.0,
        ];
        for (a, input) in meas.eigenstates(i).iter().enumerate() {
            let rho = steerlab::channel::apply_channel(params, input).map_err(|e| numerical("channel", t, e))?;
            let seed = sub_seed(noise.seed, ((k * meas.len() + i) * 2 + a) as u64);
            let counts = simulate_counts(&rho, noise.mean_total, seed).map_err(|e| numerical("tomography", t, e))?;
            let opts = ReconstructOptions {
                resamples: noise.resamples,
                seed,
                estimator: Estimator::Linear,
            };
            let rec = reconstruct_with(&counts, &opts).map_err(|e| numerical("tomography", t, e))?;
            let mean = rec.state.expectation(&bob);
            // ⟨σx⟩ = 2 Re ρ₀₁, ⟨σy⟩ = −2 Im ρ₀₁, ⟨σz⟩ = 2ρ₀₀ − 1
            let se = [2.0 * rec.stderr_re[0][1], 2.0 * rec.stderr_im[0][1], 2.0 * rec.stderr_re[0][0]];
            let se_mean_sq: f64 = b.iter().zip(&se).map(|(c, s)| (c * s).powi(2)).sum();
            // Alice's outcomes are equiprobable
            value += 0.5 * mean * mean;
            variance += (mean * mean) * se_mean_sq;
            tomography.push(ConditionedTomography {
                setting: i,
                outcome: a,
                seed,
                counts,
                reconstruction: rec,
            });
        }
    }
    Ok(NoisyS2 {
        value,
        stderr: variance.sqrt(),
        tomography,
    })
}

/// What to evaluate per grid time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepParts {
    pub steering: bool,
    pub noisy: bool,
}

/// Runs the channel once over the whole grid, then fans out over grid
/// times. Rows come back in grid order whatever the worker count.
pub fn run_sweep(cfg: &ScenarioConfig, parts: SweepParts) -> Result<SweepResult, CliError> {
    cfg.validate()?;
    let (params, heom) = channel_trajectory(cfg)?;
    let meas = MeasurementSet::pair(cfg.measurement_pair);
    let noise = cfg.shot_noise.filter(|_| parts.noisy);
    let rows: Vec<Result<SweepRow, CliError>> = params
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let t = Some(p.time);
            let settings = synthesize_settings(p).map_err(|e| numerical("synthesis", t, e))?;
            let steering = if parts.steering {
                Some(steering_row(p, &meas).map_err(|e| numerical("steering", t, e))?)
            } else {
                None
            };
            let noisy = noise.as_ref().map(|n| noisy_s2(p, &meas, n, k)).transpose()?;
            Ok(SweepRow {
                time: p.time,
                params: *p,
                settings,
                steering,
                noisy,
            })
        })
        .collect();
    // first failure in grid order, so the diagnostic is reproducible
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        config: cfg.clone(),
        heom,
        rows,
    })
}

/// Full dynamics: channel, circuit settings, steering and (if configured)
/// shot-noise reconstructions.
pub fn run_dynamics(cfg: &ScenarioConfig) -> Result<SweepResult, CliError> {
    run_sweep(cfg, SweepParts { steering: true, noisy: true })
}

/// Runs `f` on a pool of `jobs` workers (`None` lets rayon decide).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(format!("jobs: {e}")))?;
    Ok(pool.install(f))
}
