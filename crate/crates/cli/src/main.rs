use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use steerlab_cli::{
    emit_plotdata, run_dynamics, run_sweep, run_verify, with_jobs, write_dynamics, write_tomography, ChannelKind,
    CliError, PlotStyle, ScenarioConfig, ShotNoise, SweepParts,
};

#[derive(Parser)]
#[command(name = "steerlab", version, about = "Temporal steering through a non-Markovian qubit channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (JSON). Defaults to the non-RWA scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Shot-noise seed; overrides `shot_noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write circuit angles in degrees.
    #[arg(long, global = true)]
    degrees: bool,
    /// Worker threads (falls back to STEERLAB_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Channel, circuit settings and steering quantities over the time grid.
    Dynamics,
    /// Oracle checks; writes a JSON report.
    Verify,
    /// gnuplot-ready data files.
    Plotdata {
        #[arg(long, value_enum, default_value_t = Style::All)]
        style: Style,
    },
    /// Simulated tomography of the conditioned states.
    Tomo,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Style {
    S2,
    Weight,
    Channel,
    All,
}

fn jobs(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("STEERLAB_JOBS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("STEERLAB_JOBS: not a thread count: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn load(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::defaults(ChannelKind::Nonrwa),
    };
    if let Some(dir) = &cli.output {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.shot_noise.get_or_insert_with(ShotNoise::default).seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.output_dir;
    match cli.command {
        Command::Dynamics => write_dynamics(&run_dynamics(cfg)?, dir, cli.degrees),
        Command::Verify => {
            let report = run_verify(cfg);
            let json = report.to_json();
            print!("{json}");
            let path = steerlab_cli::output::write_file(dir, "verify.json", &json)?;
            if report.passed {
                Ok(vec![path])
            } else {
                Err(CliError::VerifyFailed(report.failing().iter().map(|s| s.to_string()).collect()))
            }
        }
        Command::Plotdata { style } => {
            let result = run_dynamics(cfg)?;
            let styles = match style {
                Style::S2 => vec![PlotStyle::S2],
                Style::Weight => vec![PlotStyle::Weight],
                Style::Channel => vec![PlotStyle::Channel],
                Style::All => PlotStyle::ALL.to_vec(),
            };
            let mut written = Vec::new();
            for s in styles {
                written.extend(emit_plotdata(&result, s, dir)?);
            }
            Ok(written)
        }
        Command::Tomo => {
            let mut cfg = cfg.clone();
            cfg.shot_noise.get_or_insert_with(ShotNoise::default);
            let parts = SweepParts {
                steering: false,
                noisy: true,
            };
            let result = run_sweep(&cfg, parts)?;
            let mut written = write_tomography(&result, dir)?;
            written.extend(write_dynamics(&result, dir, cli.degrees)?);
            Ok(written)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(&cli).and_then(|cfg| {
        let jobs = jobs(cli.jobs)?;
        with_jobs(jobs, || execute(&cli, &cfg))?.inspect_err(|e| {
            if let Some(path) = e.write_diagnostic(&cfg.output_dir, Some(&cfg)) {
                eprintln!("diagnostic written to {}", path.display());
            }
        })
    });
    match outcome {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("steerlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
