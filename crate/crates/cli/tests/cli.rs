use std::path::Path;
use std::process::Command;

use steerlab_cli::{
    emit_plotdata, run_dynamics, run_verify, with_jobs, write_dynamics, ChannelKind, CliError, PlotStyle,
    ScenarioConfig, ShotNoise,
};

fn short(kind: ChannelKind) -> ScenarioConfig {
    ScenarioConfig {
        time_max: 8.0,
        time_steps: 41,
        ..ScenarioConfig::defaults(kind)
    }
}

fn config_error(json: &str) -> String {
    match ScenarioConfig::from_json(json) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_is_strict() {
    let base = r#""schema":"steerlab.scenario/1","channel_kind":"rwa""#;
    assert!(config_error(&format!("{{{base},\"gama\":2}}")).contains("gama"));
    assert!(config_error(&format!("{{{base},\"gamma\":-2.5}}")).starts_with("gamma"));
    assert!(config_error(&format!("{{{base},\"time_steps\":1}}")).starts_with("time_steps"));
    assert!(config_error(r#"{"schema":"v0","channel_kind":"rwa"}"#).starts_with("schema"));
    assert!(config_error(&format!("{{{base},\"shot_noise\":{{\"mean_total\":0}}}}")).contains("mean_total"));
    let cfg = ScenarioConfig::from_json(&format!("{{{base}}}")).unwrap();
    assert_eq!(cfg, ScenarioConfig::defaults(ChannelKind::Rwa));
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn identity_scenario_is_constant() {
    let r = run_dynamics(&short(ChannelKind::Identity)).unwrap();
    assert_eq!(r.rows.len(), 41);
    for row in &r.rows {
        let s = row.steering.as_ref().unwrap();
        assert!((s.s_n.value - 2.0).abs() < 1e-10);
        assert!((s.weight - 1.0).abs() < 1e-6);
    }
}

#[test]
fn analytic_channels_track_the_bath() {
    let ad = run_dynamics(&short(ChannelKind::AmplitudeDamping)).unwrap();
    let pd = run_dynamics(&short(ChannelKind::PhaseDamping)).unwrap();
    let rwa = run_dynamics(&short(ChannelKind::Rwa)).unwrap();
    for ((a, p), r) in ad.rows.iter().zip(&pd.rows).zip(&rwa.rows) {
        assert!((a.params.q - r.params.q).abs() < 1e-6);
        assert!((a.params.coherence_direct() - r.params.coherence_direct()).norm() < 1e-6);
        assert_eq!(p.params.q, 1.0);
        assert!((p.params.coherence_direct().norm() - a.params.q.sqrt()).abs() < 1e-12);
    }
}

fn read_dir(dir: &Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn worker_count_does_not_change_outputs() {
    let mut cfg = short(ChannelKind::Nonrwa);
    cfg.shot_noise = Some(ShotNoise {
        resamples: 20,
        ..ShotNoise::default()
    });
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (jobs, dir) in [1, 3].into_iter().zip(&dirs) {
        let r = with_jobs(Some(jobs), || run_dynamics(&cfg)).unwrap().unwrap();
        write_dynamics(&r, dir.path(), true).unwrap();
    }
    let (a, b) = (read_dir(dirs[0].path()), read_dir(dirs[1].path()));
    assert_eq!(a.len(), 4);
    assert_eq!(a, b);
}

#[test]
fn plot_files_follow_the_contract() {
    let mut cfg = short(ChannelKind::Rwa);
    cfg.shot_noise = Some(ShotNoise {
        resamples: 20,
        ..ShotNoise::default()
    });
    let r = run_dynamics(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for style in PlotStyle::ALL {
        emit_plotdata(&r, style, dir.path()).unwrap();
    }
    let files = read_dir(dir.path());
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        ["params.dat", "s2_noisy.dat", "s2_theory.dat", "steering_limit.dat", "wts_theory.dat"]
    );
    for (name, text) in &files {
        assert!(!text.contains('\r'), "{name}");
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert!(text.starts_with('#'), "{name}");
        let width = match name.as_str() {
            "params.dat" => 10,
            "s2_noisy.dat" => 3,
            _ => 2,
        };
        for line in &data {
            assert_eq!(line.split(' ').count(), width, "{name}: {line}");
        }
        if name == "wts_theory.dat" {
            for line in &data {
                let w: f64 = line.split(' ').nth(1).unwrap().parse().unwrap();
                assert!(w == 0.0 || w.abs() >= 1e-9);
            }
        }
    }
}

#[test]
fn default_verify_passes() {
    let report = run_verify(&short(ChannelKind::Nonrwa));
    assert!(report.passed, "{}", report.to_json());
}

fn steerlab(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_steerlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("STEERLAB_JOBS")
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema":"steerlab.scenario/1","channel_kind":"nonrwa","gamma":-1}"#).unwrap();
    let out = steerlab(&["dynamics", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    // deliberate under-truncation at strong coupling
    let strong = dir.path().join("strong.json");
    std::fs::write(
        &strong,
        r#"{"schema":"steerlab.scenario/1","channel_kind":"nonrwa","gamma":20,"lambda_width":1,
            "tier_cap":2,"time_max":5,"time_steps":51,"output_dir":"strong"}"#,
    )
    .unwrap();
    let out = steerlab(&["dynamics", "--config", strong.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let diag = std::fs::read_to_string(dir.path().join("strong/diagnostic.txt")).unwrap();
    assert!(diag.starts_with("stage: heom"));

    let out = steerlab(&["verify", "--config", strong.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failing: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["heom_tier_convergence"]);
}

#[test]
fn binary_tomo_writes_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"schema":"steerlab.scenario/1","channel_kind":"identity","time_max":1,"time_steps":3,
            "shot_noise":{"resamples":10}}"#,
    )
    .unwrap();
    let out = steerlab(
        &["tomo", "--config", cfg.to_str().unwrap(), "--seed", "9", "--output", "t", "--jobs", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let counts = std::fs::read_to_string(dir.path().join("t/counts_a1_plus.csv")).unwrap();
    let header = counts.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "time,basis_id,counts,mean_total,seed");
    assert!(counts.contains("seed=9"));
    assert_eq!(counts.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 6);
}
