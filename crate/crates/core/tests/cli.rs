use std::path::Path;
use std::process::{Command, Output};

use panjer_track::experiment::Experiment;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_panjer-track"));
    cmd.env_remove("PANJER_TRACK_OUT");
    cmd
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Scenario 3 cut to a few steps, written as a config file.
fn short_config(dir: &Path, steps: usize) -> std::path::PathBuf {
    let mut exp = Experiment::builtin("scenario3").unwrap();
    exp.scenario.duration = steps;
    exp.run.n_max = 60;
    let path = dir.join("short.toml");
    std::fs::write(&path, exp.to_toml().unwrap()).unwrap();
    path
}

fn without_timing(csv: &str) -> String {
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    csv.lines()
        .map(|l| {
            l.split(',')
                .enumerate()
                .filter(|(i, _)| !header[*i].ends_with("_ms"))
                .map(|(_, c)| c)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), 3);
    let out = dir.path().join("out");
    let o = bin()
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--filters",
            "phd,sophd,cphd",
            "--mc",
            "2",
            "--seed",
            "7",
        ])
        .args(["--out", out.to_str().unwrap(), "--workers", "1"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let steps = std::fs::read_to_string(out.join("scenario3/steps.csv")).unwrap();
    let mut lines = steps.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,trial,filter,est_mean,est_var,ospa,predict_ms,update_ms,region0_mean,region0_var,region1_mean,region1_var,corr"
    );
    assert_eq!(lines.count(), 3 * 2 * 3);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("scenario3/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["mc_runs"], 2);
    assert_eq!(summary["filters"].as_array().unwrap().len(), 3);
    assert!(out.join("scenario3/aggregate.csv").exists());

    let again = dir.path().join("again");
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--mc", "2", "--seed", "7"])
        .env("PANJER_TRACK_OUT", &again)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let steps2 = std::fs::read_to_string(again.join("scenario3/steps.csv")).unwrap();
    assert_eq!(without_timing(&steps), without_timing(&steps2));
}

#[test]
fn cphd_prediction_is_much_slower() {
    let dir = tempfile::tempdir().unwrap();
    let predict = |filter: &str| -> f64 {
        let out = dir.path().join(filter);
        let o = bin()
            .args(["run", "--scenario", "scenario2_1", "--filters", filter, "--mc", "1"])
            .args(["--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let s: Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("scenario2_1/summary.json")).unwrap()).unwrap();
        s["filters"][0]["predict_ms_mean"].as_f64().unwrap()
    };
    let (cphd, sophd) = (predict("cphd"), predict("sophd"));
    assert!(cphd > 10.0 * sophd, "cphd {cphd} ms vs sophd {sophd} ms");
}

#[test]
fn missing_config_exits_2_with_path() {
    let o = bin()
        .args(["run", "--config", "/definitely/not/here.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/not/here.toml"));
}

#[test]
fn unknown_scenario_is_reported() {
    let o = bin().args(["validate", "--scenario", "scenario9"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario9"));
}

#[test]
fn validate_echoes_both_regions() {
    let o = bin().args(["validate", "--scenario", "scenario3"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let exp = Experiment::from_toml(&text).unwrap();
    assert_eq!(exp, Experiment::builtin("scenario3").unwrap());
    assert_eq!(text.matches("[[scenario.regions]]").count(), 2);
    assert!(text.contains("x_min = 150.0") && text.contains("x_max = 200.0"));
    assert!(text.contains("n_max = 150"));
}

#[test]
fn validate_names_unknown_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = Experiment::builtin("scenario1_1").unwrap().to_toml().unwrap();
    std::fs::write(
        &path,
        text.replace("[scenario.motion]\n", "[scenario.motion]\njerk_sigma = 1.0\n"),
    )
    .unwrap();
    let o = bin()
        .args(["validate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("jerk_sigma") && err.contains("line"), "{err}");
}

#[test]
fn shipped_configs_match_the_catalogue() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for scn in panjer_track::simulator::builtin_scenarios() {
        let path = dir.join(format!("{}.toml", scn.name));
        let exp = Experiment::from_file(&path).unwrap();
        assert_eq!(exp, Experiment::builtin(&scn.name).unwrap(), "{}", path.display());
    }
}
