//! End-to-end tests of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

use fdmcar::sample_model::write_csv;
use fdmcar::simulation::{generate_scenario, Mechanism};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fdmcar"))
}

fn write_case1_csv(dir: &Path, n: usize, seed: u64) -> std::path::PathBuf {
    let (sample, _) = generate_scenario(n, 20, Mechanism::McarInterval, seed).unwrap();
    let path = dir.join("sample.csv");
    write_csv(&sample, &path, "NA").unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn test_command_emits_three_results_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_case1_csv(dir.path(), 40, 1);
    let out = dir.path().join("result.json");
    let output = run(bin()
        .args(["test", "--input"])
        .arg(&input)
        .args(["--method", "all", "--bstar", "300", "--seed", "5", "--out"])
        .arg(&out));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["results"].as_array().unwrap().len(), 3);
    assert_eq!(json["schema_version"], 1);
    for r in json["results"].as_array().unwrap() {
        let p = r["p_value"].as_f64().unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
    let manifest_path = dir.path().join("result.json.manifest.json");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["command"].as_array().unwrap().len() > 2);
}

#[test]
fn malformed_csv_exits_one_with_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "1,2\n3,zap\n").unwrap();
    let output = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("row 2"), "stderr: {err}");
}

#[test]
fn missing_file_exits_one() {
    let output = run(bin().args(["test", "--input", "/nonexistent/data.csv"]));
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn validation_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("complete.csv");
    // Every curve complete: the complete/incomplete partition leaves one
    // group empty, a statistical-validation failure.
    std::fs::write(&input, "1,2\n3,4\n5,6\n").unwrap();
    let output = run(bin().args(["test", "--input"]).arg(&input));
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("error"), "stderr: {err}");
}

#[test]
fn measure_partition_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_case1_csv(dir.path(), 40, 2);
    let output = run(bin()
        .args(["test", "--input"])
        .arg(&input)
        .args(["--partition", "measure:0.43", "--method", "l2", "--bstar", "200"]));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&output.stdout)).unwrap();
    assert_eq!(json["results"][0]["method"], "l2");
}

#[test]
fn band_defaults_derive_from_the_input_stem() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_case1_csv(dir.path(), 60, 3);
    let output = run(bin()
        .args(["band", "--input"])
        .arg(&input)
        .args(["--bstar", "300", "--seed", "8", "--plot"]));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let csv = dir.path().join("sample.band.csv");
    let svg = dir.path().join("sample.band.svg");
    assert!(csv.exists(), "default band csv missing");
    assert!(svg.exists(), "default band svg missing");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,center,lower,upper\n"));
    let lines: Vec<&str> = text.lines().skip(1).collect();
    assert!(!lines.is_empty());
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 4);
        // lower <= center <= upper with a constant half-width.
        assert!(cells[2] <= cells[1] && cells[1] <= cells[3]);
    }
    assert!(std::fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn dump_estimates_writes_means_and_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_case1_csv(dir.path(), 40, 4);
    let out_dir = dir.path().join("estimates");
    let output = run(bin()
        .args(["dump-estimates", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&out_dir));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    for name in ["mean_a.csv", "mean_b.csv", "kernel.csv"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let mean_a = std::fs::read_to_string(out_dir.join("mean_a.csv")).unwrap();
    assert!(mean_a.starts_with("t,mu,p_hat\n"));
    let kernel = std::fs::read_to_string(out_dir.join("kernel.csv")).unwrap();
    let rows: Vec<&str> = kernel.lines().collect();
    let cols = rows[0].split(',').count();
    assert_eq!(rows.len(), cols, "kernel must be square");
}

#[test]
fn seed_env_var_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_case1_csv(dir.path(), 40, 6);
    let run_with = |seed_env: Option<&str>, seed_flag: Option<&str>| -> String {
        let mut cmd = bin();
        cmd.args(["test", "--input"])
            .arg(&input)
            .args(["--method", "cvm", "--bstar", "200"]);
        if let Some(s) = seed_env {
            cmd.env("FDMCAR_SEED", s);
        }
        if let Some(s) = seed_flag {
            cmd.args(["--seed", s]);
        }
        let output = run(&mut cmd);
        assert!(output.status.success());
        String::from_utf8_lossy(&output.stdout).into_owned()
    };
    let via_env = run_with(Some("42"), None);
    let via_flag = run_with(None, Some("42"));
    let flag_wins = run_with(Some("7"), Some("42"));
    assert_eq!(via_env, via_flag);
    assert_eq!(via_flag, flag_wins);
}

#[test]
fn simulate_emits_a_rate_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    let output = run(bin()
        .args(["simulate", "--case", "1", "--n", "30", "--reps", "4"])
        .args(["--bstar", "150", "--seed", "11", "--calibration", "asymptotic", "--out"])
        .arg(&out));
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("method,calibration,rejection_rate\n"));
    assert_eq!(text.lines().count(), 4);
}
