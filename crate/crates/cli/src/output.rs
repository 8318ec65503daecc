use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use steerlab::channel::ChannelParams;
use steerlab::optics::CircuitSettings;
use steerlab::steering::SteeringRow;
use steerlab::tomography::{COUNTS_CSV_HEADER, RECONSTRUCTION_CSV_HEADER};

use crate::sweep::SweepResult;
use crate::CliError;

/// Values this small are printed as zero in plot files.
pub const ZERO_CLAMP: f64 = 1e-9;

pub const NOISY_CSV_HEADER: &str = "time,S2_noisy,S2_stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    S2,
    Weight,
    Channel,
}

impl PlotStyle {
    pub const ALL: [PlotStyle; 3] = [PlotStyle::S2, PlotStyle::Weight, PlotStyle::Channel];
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes `contents` below `dir`, creating the directory if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn preamble(kind: &str, result: &SweepResult) -> String {
    let mut s = format!("# steerlab {kind}\n# {}\n", result.config.describe());
    if let Some(h) = result.heom {
        let _ = writeln!(s, "# heom tier_cap={} tier_discrepancy={:e}", h.tier_cap, h.tier_discrepancy);
    }
    s
}

fn csv(kind: &str, result: &SweepResult, header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = preamble(kind, result);
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// CSV outputs of the dynamics run. Returns the written paths.
pub fn write_dynamics(result: &SweepResult, dir: &Path, degrees: bool) -> Result<Vec<PathBuf>, CliError> {
    let rows = &result.rows;
    let mut written = vec![
        write_file(
            dir,
            "channel_params.csv",
            &csv("channel", result, ChannelParams::CSV_HEADER, rows.iter().map(|r| r.params.csv_row())),
        )?,
        write_file(
            dir,
            "circuit_settings.csv",
            &csv(
                if degrees { "circuit (degrees)" } else { "circuit (radians)" },
                result,
                CircuitSettings::CSV_HEADER,
                rows.iter().map(|r| r.settings.csv_row(r.time, degrees)),
            ),
        )?,
    ];
    let steering: Vec<&SteeringRow> = rows.iter().filter_map(|r| r.steering.as_ref()).collect();
    if steering.len() == rows.len() {
        let settings = steering.first().map_or(2, |s| s.s_n.terms.len());
        written.push(write_file(
            dir,
            "steering.csv",
            &csv(
                "steering",
                result,
                &SteeringRow::csv_header(settings),
                steering.iter().map(|s| s.csv_row()),
            ),
        )?);
    }
    if rows.iter().all(|r| r.noisy.is_some()) && !rows.is_empty() {
        written.push(write_file(
            dir,
            "s2_noisy.csv",
            &csv(
                "shot-noise S2",
                result,
                NOISY_CSV_HEADER,
                rows.iter().map(|r| {
                    let n = r.noisy.as_ref().expect("checked");
                    format!("{},{},{}", r.time, n.value, n.stderr)
                }),
            ),
        )?);
    }
    Ok(written)
}

fn sign_label(outcome: usize) -> &'static str {
    if outcome == 0 {
        "plus"
    } else {
        "minus"
    }
}

/// Count and reconstruction CSVs, one pair per conditioned state
/// (`a{i}_{plus|minus}` names Alice's setting and outcome).
pub fn write_tomography(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let Some(first) = result.rows.first().and_then(|r| r.noisy.as_ref()) else {
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    for (slot, cond) in first.tomography.iter().enumerate() {
        let tag = format!("a{}_{}", cond.setting + 1, sign_label(cond.outcome));
        let each = |f: &dyn Fn(f64, &crate::sweep::ConditionedTomography) -> String| -> Vec<String> {
            result
                .rows
                .iter()
                .filter_map(|r| r.noisy.as_ref().map(|n| f(r.time, &n.tomography[slot])))
                .collect()
        };
        let counts = each(&|t, c| {
            c.counts
                .iter()
                .map(|rec| rec.csv_row(t, c.seed))
                .collect::<Vec<_>>()
                .join("\n")
        });
        let kind = format!("tomography counts {tag}");
        written.push(write_file(
            dir,
            &format!("counts_{tag}.csv"),
            &csv(&kind, result, COUNTS_CSV_HEADER, counts.into_iter()),
        )?);
        let recs = each(&|t, c| c.reconstruction.csv_row(t));
        written.push(write_file(
            dir,
            &format!("reconstruction_{tag}.csv"),
            &csv(&format!("tomography reconstruction {tag}"), result, RECONSTRUCTION_CSV_HEADER, recs.into_iter()),
        )?);
    }
    Ok(written)
}

fn clamp(v: f64) -> f64 {
    if v.abs() < ZERO_CLAMP {
        0.0
    } else {
        v
    }
}

fn dat(result: &SweepResult, title: &str, columns: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = format!("# {title}\n# {}\n# {columns}\n", result.config.describe());
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// gnuplot-ready whitespace-separated series for one plot style.
pub fn emit_plotdata(result: &SweepResult, style: PlotStyle, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = &result.rows;
    let missing = |what: &str| CliError::Numerical {
        stage: "plotdata".into(),
        time: None,
        message: format!("sweep has no {what} values"),
    };
    let mut written = Vec::new();
    match style {
        PlotStyle::S2 => {
            let s2 = rows
                .iter()
                .map(|r| r.steering.as_ref().map(|s| format!("{} {}", r.time, s.s_n.value)))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| missing("steering"))?;
            written.push(write_file(
                dir,
                "s2_theory.dat",
                &dat(result, "S2 theory", "time S2", s2.into_iter()),
            )?);
            if rows.iter().all(|r| r.noisy.is_some()) && !rows.is_empty() {
                let noisy = rows.iter().map(|r| {
                    let n = r.noisy.as_ref().expect("checked");
                    format!("{} {} {}", r.time, n.value, n.stderr)
                });
                written.push(write_file(
                    dir,
                    "s2_noisy.dat",
                    &dat(result, "S2 shot noise", "time S2 stderr", noisy),
                )?);
            }
            let (t0, t1) = (rows.first().map_or(0.0, |r| r.time), rows.last().map_or(0.0, |r| r.time));
            written.push(write_file(
                dir,
                "steering_limit.dat",
                &dat(
                    result,
                    "steering limit S2 = 1",
                    "time S2",
                    [format!("{t0} 1"), format!("{t1} 1")].into_iter(),
                ),
            )?);
        }
        PlotStyle::Weight => {
            let w = rows
                .iter()
                .map(|r| r.steering.as_ref().map(|s| format!("{} {}", r.time, clamp(s.weight))))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| missing("steering"))?;
            written.push(write_file(
                dir,
                "wts_theory.dat",
                &dat(result, "W_TS theory", "time W_TS", w.into_iter()),
            )?);
        }
        PlotStyle::Channel => {
            let columns = ChannelParams::CSV_HEADER.replace(',', " ");
            let lines = rows.iter().map(|r| r.params.csv_row().replace(',', " "));
            written.push(write_file(
                dir,
                "params.dat",
                &dat(result, "channel parameters", &columns, lines),
            )?);
        }
    }
    Ok(written)
}
