use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use steerlab::channel::Picture;
use steerlab::steering::MeasurementPair;
use steerlab::tomography::{DEFAULT_MEAN_TOTAL, DEFAULT_RESAMPLES};

use crate::CliError;

pub const SCHEMA: &str = "steerlab.scenario/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Nonrwa,
    Rwa,
    AmplitudeDamping,
    PhaseDamping,
    Identity,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Nonrwa => "nonrwa",
            ChannelKind::Rwa => "rwa",
            ChannelKind::AmplitudeDamping => "amplitude_damping",
            ChannelKind::PhaseDamping => "phase_damping",
            ChannelKind::Identity => "identity",
        }
    }

    /// Whether the channel comes out of the hierarchy solver.
    pub fn uses_heom(self) -> bool {
        matches!(self, ChannelKind::Nonrwa | ChannelKind::Rwa)
    }

    /// Whether the channel depends on the bath parameters at all.
    pub fn uses_bath(self) -> bool {
        self != ChannelKind::Identity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotNoise {
    pub mean_total: f64,
    pub seed: u64,
    pub resamples: usize,
}

impl Default for ShotNoise {
    fn default() -> Self {
        ShotNoise {
            mean_total: DEFAULT_MEAN_TOTAL,
            seed: 0,
            resamples: DEFAULT_RESAMPLES,
        }
    }
}

fn default_gamma() -> f64 {
    2.5
}

fn default_lambda() -> f64 {
    0.05
}

fn default_time_max() -> f64 {
    40.0
}

fn default_time_steps() -> usize {
    401
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A scenario file. Every field except `schema` and `channel_kind` has a
/// default; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: String,
    pub channel_kind: ChannelKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_lambda")]
    pub lambda_width: f64,
    #[serde(default = "default_time_max")]
    pub time_max: f64,
    #[serde(default = "default_time_steps")]
    pub time_steps: usize,
    #[serde(default)]
    pub measurement_pair: MeasurementPair,
    #[serde(default)]
    pub picture: Picture,
    #[serde(default)]
    pub shot_noise: Option<ShotNoise>,
    #[serde(default)]
    pub tier_cap: Option<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl ScenarioConfig {
    /// Default bath parameters for the given channel.
    pub fn defaults(channel_kind: ChannelKind) -> Self {
        ScenarioConfig {
            schema: SCHEMA.to_string(),
            channel_kind,
            gamma: default_gamma(),
            lambda_width: default_lambda(),
            time_max: default_time_max(),
            time_steps: default_time_steps(),
            measurement_pair: MeasurementPair::Xz,
            picture: Picture::Schrodinger,
            shot_noise: None,
            tier_cap: None,
            output_dir: default_output(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if self.schema != SCHEMA {
            return fail("schema", format!("expected \"{SCHEMA}\", got \"{}\"", self.schema));
        }
        if self.channel_kind.uses_bath() {
            if !(self.gamma.is_finite() && self.gamma > 0.0) {
                return fail("gamma", format!("must be positive and finite, got {}", self.gamma));
            }
            if !(self.lambda_width.is_finite() && self.lambda_width > 0.0) {
                return fail("lambda_width", format!("must be positive and finite, got {}", self.lambda_width));
            }
        }
        if !(self.time_max.is_finite() && self.time_max > 0.0) {
            return fail("time_max", format!("must be positive and finite, got {}", self.time_max));
        }
        if self.time_steps < 2 {
            return fail("time_steps", format!("must be at least 2, got {}", self.time_steps));
        }
        if let Some(n) = &self.shot_noise {
            if !(n.mean_total.is_finite() && n.mean_total > 0.0) {
                return fail("shot_noise.mean_total", format!("must be positive and finite, got {}", n.mean_total));
            }
            if n.resamples < 2 {
                return fail("shot_noise.resamples", format!("must be at least 2, got {}", n.resamples));
            }
        }
        if let Some(t) = self.tier_cap {
            if t < 2 {
                return fail("tier_cap", format!("must be at least 2, got {t}"));
            }
        }
        Ok(())
    }

    /// `time_steps` equally spaced points on `[0, time_max]`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.time_steps - 1;
        (0..=n).map(|k| self.time_max * k as f64 / n as f64).collect()
    }

    /// One-line description used in output headers.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "channel={} gamma={} lambda={} time_max={} time_steps={} pair={} picture={}",
            self.channel_kind.name(),
            self.gamma,
            self.lambda_width,
            self.time_max,
            self.time_steps,
            self.measurement_pair.name(),
            match self.picture {
                Picture::Schrodinger => "schrodinger",
                Picture::Interaction => "interaction",
            },
        );
        if let Some(t) = self.tier_cap {
            s.push_str(&format!(" tier_cap={t}"));
        }
        if let Some(n) = &self.shot_noise {
            s.push_str(&format!(
                " mean_total={} seed={} resamples={} rng=chacha8",
                n.mean_total, n.seed, n.resamples
            ));
        }
        s
    }
}
