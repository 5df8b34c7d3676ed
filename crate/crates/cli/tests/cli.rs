use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stochpsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochpsi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = stochpsi(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn malformed_angle_list_is_a_usage_error() {
    for bad in ["0,90,225", "0,90,x,1", "0,,90,1", "nan,0,0,0"] {
        let out = stochpsi(&["chsh", "--angles", bad]);
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn unknown_flag_and_bad_values_exit_one() {
    assert_eq!(stochpsi(&["sg", "--bogus"]).status.code(), Some(1));
    assert_eq!(stochpsi(&["sg", "--p", "1.5"]).status.code(), Some(1));
    assert_eq!(stochpsi(&["eprb-dual", "--beta", "0"]).status.code(), Some(1));
    assert_eq!(stochpsi(&["chsh", "--convention", "quarter/plus/as-printed"]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(stochpsi(&["--help"]).status.code(), Some(0));
    assert_eq!(stochpsi(&["--version"]).status.code(), Some(0));
}

#[test]
fn no_coincidences_is_a_runtime_error() {
    let out = stochpsi(&["chsh", "--beta", "100", "--n-trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no coincidences"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# typo below\nn-trails = 10\n").unwrap();
    let out = stochpsi(&["sg", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n-trails"));
}

#[test]
fn chsh_standard_angles_single_bounded() {
    let doc = json(&["chsh", "--n-trials", "100000", "--seed", "11"]);
    let s = doc["result"]["s_value"].as_f64().unwrap();
    assert!((s - 2.11).abs() < 0.15, "S = {s}");
    assert_eq!(doc["result"]["terms"].as_array().unwrap().len(), 4);
}

#[test]
fn sg_rates_at_unit_threshold() {
    let doc = json(&["sg", "--p", "0.5", "--n-trials", "100000"]);
    let row = &doc["result"]["rows"][0];
    let dd = row["dd_rate"].as_f64().unwrap();
    let nd = row["nd_rate"].as_f64().unwrap();
    assert!((dd - 0.12).abs() < 0.02, "DD {dd}");
    assert!((nd - 0.33).abs() < 0.02, "ND {nd}");
}

#[test]
fn kepler_check_reports_small_drifts() {
    let doc = json(&["kepler-check"]);
    let r = &doc["result"];
    assert!(r["max_energy_drift"].as_f64().unwrap() < 1e-5);
    assert!(r["max_angular_momentum_drift"].as_f64().unwrap() < 1e-5);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sg.conf");
    fs::write(&cfg, "n_trials = 500\nbeta = 2\np = 0.25\n").unwrap();
    let doc = json(&["sg", "--config", path_str(&cfg), "--beta", "1"]);
    assert_eq!(doc["config"]["n-trials"], "500");
    assert_eq!(doc["config"]["beta"], "1");
    assert_eq!(doc["config"]["p"], "0.25");
}

#[test]
fn csv_output_starts_with_manifest_comments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let run = stochpsi(&[
        "eprb-single", "--deltas", "0,45,90", "--n-trials", "2000", "--format", "csv", "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["schema-version=1", "subcommand=eprb-single", "seed=", "mode=bounded", "n-trials=2000", "manifest="] {
        assert!(header.iter().any(|l| l.contains(key)), "missing {key} in {header:?}");
    }
    let body: Vec<&str> = text.lines().skip(header.len()).collect();
    assert!(body[0].starts_with("delta_deg,"));
    assert_eq!(body.len(), 4);

    let manifest = fs::read_to_string(dir.path().join("sweep.csv.manifest")).unwrap();
    for key in ["subcommand = eprb-single", "started-unix", "finished-unix", "outputs", "seed = 7", "variance"] {
        assert!(manifest.contains(key), "missing {key}");
    }
}

fn assert_rerun_identical(args: &[&str], ext: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join(format!("run.{ext}"));
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", path_str(&out)]);
    assert!(stochpsi(&full).status.success());
    let first = fs::read(&out).unwrap();

    let manifest = dir.path().join(format!("run.{ext}.manifest"));
    let format = if ext == "csv" { "csv" } else { "json" };
    for threads in ["1", "4"] {
        let rerun = stochpsi(&[
            "rerun", path_str(&manifest), "--out", path_str(&out), "--format", format, "--threads", threads,
        ]);
        assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
        assert_eq!(fs::read(&out).unwrap(), first, "{args:?} at {threads} threads");
    }
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    assert_rerun_identical(&["chsh", "--n-trials", "5000", "--seed", "3"], "json");
    assert_rerun_identical(&["sg", "--p", "0.1,0.9", "--n-trials", "3000", "--format", "csv"], "csv");
    assert_rerun_identical(&["repeat", "--n-trials", "3000", "--innovation", "reuse"], "json");
}

#[test]
fn rerun_accepts_a_csv_header_as_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sg.csv");
    assert!(stochpsi(&["sg", "--p", "0.5", "--n-trials", "2000", "--format", "csv", "--out", path_str(&out)])
        .status
        .success());
    let first = fs::read(&out).unwrap();
    let copy = dir.path().join("input.csv");
    fs::copy(&out, &copy).unwrap();
    let rerun = stochpsi(&["rerun", path_str(&copy), "--out", path_str(&out), "--format", "csv"]);
    assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn thread_count_does_not_change_results() {
    let run = |threads: &str| {
        let out = stochpsi(&["eprb-dual", "--beta", "2", "--deltas", "0,60", "--n-trials", "20000", "--threads", threads]);
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn dump_trials_writes_per_trial_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let run = stochpsi(&[
        "eprb-single", "--deltas", "0,90", "--n-trials", "100", "--out", path_str(&out), "--dump-trials",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let trials = fs::read_to_string(dir.path().join("sweep.json.trials.csv")).unwrap();
    let rows = trials.lines().filter(|l| !l.starts_with('#')).count();
    // header plus 100 trials at each angle
    assert_eq!(rows, 1 + 200);

    let no_out = stochpsi(&["eprb-single", "--n-trials", "100", "--dump-trials"]);
    assert_eq!(no_out.status.code(), Some(1));
    let unsupported = stochpsi(&["kepler-check", "--out", path_str(&dir.path().join("k.json")), "--dump-trials"]);
    assert_eq!(unsupported.status.code(), Some(1));
}

#[test]
fn negative_angles_and_forces_parse() {
    let doc = json(&["chsh", "--angles", "-45,45,-90,90", "--n-trials", "2000"]);
    // angles are reported reduced to [0, 360)
    assert_eq!(doc["result"]["angles_deg"][0], 315.0);
    let doc = json(&["dynamics", "--force-f", "-0.003", "--n-steps", "10000"]);
    assert_eq!(doc["result"]["label"], "down");
}

#[test]
fn audit_reports_the_local_bound() {
    let doc = json(&["audit", "--n-trials", "2000", "--gaussian"]);
    assert_eq!(doc["result"]["local_deterministic_bound"], 2.0);
    assert!(doc["result"]["passive_witness"].is_object());
}
