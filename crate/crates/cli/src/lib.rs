//! Scenario runner: configuration, grid sweeps, and file emission.

pub mod config;
pub mod output;
pub mod sweep;
pub mod verify;

use std::path::Path;

use thiserror::Error;

pub use config::{ChannelKind, ScenarioConfig, ShotNoise};
pub use output::{emit_plotdata, write_dynamics, write_tomography, PlotStyle};
pub use sweep::{run_dynamics, run_sweep, with_jobs, SweepParts, SweepResult, SweepRow};
pub use verify::{run_verify, VerifyReport};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const DIAGNOSTIC_FILE: &str = "diagnostic.txt";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure in {stage}{}: {message}", time.map(|t| format!(" at t={t}")).unwrap_or_default())]
    Numerical {
        stage: String,
        time: Option<f64>,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed: {}", .0.join(", "))]
    VerifyFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io(_) | CliError::VerifyFailed(_) => EXIT_FAILURE,
        }
    }

    /// Writes the diagnostic file for a numerical failure. Other errors
    /// leave the output directory untouched.
    pub fn write_diagnostic(&self, dir: &Path, cfg: Option<&ScenarioConfig>) -> Option<std::path::PathBuf> {
        let CliError::Numerical { stage, time, message } = self else {
            return None;
        };
        let mut text = format!("stage: {stage}\n");
        if let Some(t) = time {
            text.push_str(&format!("time: {t}\n"));
        }
        text.push_str(&format!("message: {message}\n"));
        if let Some(cfg) = cfg {
            text.push_str(&format!("scenario: {}\n", cfg.describe()));
        }
        output::write_file(dir, DIAGNOSTIC_FILE, &text).ok()
    }
}
