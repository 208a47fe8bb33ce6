use std::path::PathBuf;
use std::process::{Command, Output};

use feyncoh_cli::config::parse_str;
use feyncoh_cli::presets;
use feyncoh_cli::run::{execute, RunError, RunOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_feyncoh"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("feyncoh-cli-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    if let Some(t) = threads {
        c.env("FEYNCOH_THREADS", t);
    }
    c.output().unwrap()
}

#[test]
fn validate_reports_every_error_and_exits_2() {
    let dir = scratch("validate");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("bad.toml");
    std::fs::write(&file, "name = \"x\"\nexperiment = \"hbt\"\nseed = -4\n\n[[sources]]\nkind = \"laser\"\nomega0 = \"1 kg\"\n").unwrap();
    let out = run(&["validate", file.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3: seed"), "{err}");
    assert!(err.contains("line 7: sources[0].omega0"), "{err}");

    let ok = run(&["validate", "thermal-hbt"], None);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn run_writes_artifacts_and_reruns_bit_identically() {
    let a = scratch("run-a");
    let b = scratch("run-b");
    let args = |d: &PathBuf| vec!["run".to_string(), "thermal-hbt".into(), "--samples".into(), "3000".into(), "--out-dir".into(), d.display().to_string()];
    let first = bin().args(args(&a)).env("FEYNCOH_THREADS", "1").output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let second = bin().args(args(&b)).env("FEYNCOH_THREADS", "3").output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    for f in ["pattern.csv", "report.txt", "meta.json", "config.toml"] {
        assert!(a.join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read(a.join("pattern.csv")).unwrap();
    assert_eq!(csv, std::fs::read(b.join("pattern.csv")).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("tau_s,analytic,mc_mean,mc_stderr\n"));
    let report = std::fs::read_to_string(a.join("report.txt")).unwrap();
    assert!(report.contains("g2_zero_analytic = 2.000000"), "{report}");
    assert!(report.contains("max_deviation_se = "));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["samples"], 3000);
    assert_eq!(meta["seed"], 1);
    assert!(meta["timings_s"]["total"].as_f64().unwrap() >= 0.0);

    // the written config reproduces the run
    let c = scratch("run-c");
    let replay = run(&["run", a.join("config.toml").to_str().unwrap(), "--out-dir", c.to_str().unwrap()], None);
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("pattern.csv")).unwrap(), std::fs::read(c.join("pattern.csv")).unwrap());
}

#[test]
fn overrides_apply() {
    let d = scratch("override");
    let out = run(&["run", "thermal-hbt", "--mode", "analytic", "--seed", "42", "--out-dir", d.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["mode"], "analytic");
    let csv = std::fs::read_to_string(d.join("pattern.csv")).unwrap();
    // no Monte Carlo columns filled
    assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn unknown_figure_is_a_usage_error() {
    let out = run(&["reproduce", "fig99"], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig4") && err.contains("fig35"), "{err}");
}

#[test]
fn reproduce_writes_data() {
    let d = scratch("fig12");
    let out = run(&["reproduce", "fig12", "--out-dir", d.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.join("pattern.csv")).unwrap();
    assert!(csv.starts_with("tau_s,dw,2dw,4dw\n"));
    assert!(std::fs::read_to_string(d.join("checks.txt")).unwrap().contains("PASS"));
}

#[test]
fn list_presets_names_them_all() {
    let out = run(&["list-presets"], None);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for (name, _) in presets::PRESETS {
        assert!(text.contains(name));
    }
}

#[test]
fn exit_codes_by_error_kind() {
    assert_eq!(RunError::Numeric("x".into()).exit_code(), 3);
    assert_eq!(RunError::from(feyncoh::Error::Numeric("nan".into())).exit_code(), 3);
    assert_eq!(RunError::from(feyncoh::Error::Singularity).exit_code(), 3);
    assert_eq!(RunError::from(feyncoh::Error::Usage("u".into())).exit_code(), 2);
    assert_eq!(RunError::Validation(vec![]).exit_code(), 2);
}

#[test]
fn unsupported_combination_is_a_usage_error() {
    let cfg = parse_str(
        r#"
name = "hbt-two"
experiment = "hbt"

[[sources]]
kind = "laser"
omega0 = "3e15 rad/s"

[[sources]]
kind = "laser"
omega0 = "3e15 rad/s"
"#,
    )
    .unwrap();
    let err = execute(&cfg, &RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
