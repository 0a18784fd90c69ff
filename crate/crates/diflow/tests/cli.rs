//! End-to-end checks of the `diflow` binary: output contents, exit codes,
//! and byte-level determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diflow"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("diflow-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn bsc_instance() -> PathBuf {
    let path = scratch("bsc01.json");
    fs::write(
        &path,
        r#"{
  "horizon": 0,
  "x_sizes": [2],
  "y_sizes": [2],
  "input_kernels": [[[0.5, 0.5]]],
  "channel_kernels": [[[0.9, 0.1], [0.1, 0.9]]]
}"#,
    )
    .unwrap();
    path
}

fn memory_instance() -> PathBuf {
    // n = 1 binary channel with one-step memory; the input kernels are a
    // placeholder for commands that optimize over them.
    let path = scratch("memory.json");
    let q1_rows: Vec<String> = (0..8)
        .map(|h| {
            let x1 = h % 2;
            let y0 = (h / 2) % 2;
            let x0 = h / 4;
            let flip = 0.05 + 0.1 * ((x0 ^ y0) as f64) + 0.15 * (y0 as f64);
            let mut mass = [flip, flip];
            mass[x1] = 1.0 - flip;
            format!("[{}, {}]", mass[0], mass[1])
        })
        .collect();
    fs::write(
        &path,
        format!(
            r#"{{
  "horizon": 1,
  "x_sizes": [2, 2],
  "y_sizes": [2, 2],
  "input_kernels": [[[0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5], [0.5, 0.5], [0.5, 0.5]]],
  "channel_kernels": [[[0.85, 0.15], [0.15, 0.85]], [{}]]
}}"#,
            q1_rows.join(", ")
        ),
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn compute_reports_three_agreeing_routes() {
    let instance = bsc_instance();
    let output = run(&["compute", "--instance", instance.to_str().unwrap()]);
    assert!(output.status.success());
    let value = stdout_json(&output);
    let reports = value.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    let want = 0.5310044064107189;
    for report in reports {
        let total = report["total_bits"].as_f64().unwrap();
        assert!((total - want).abs() < 1e-10, "total {total}");
    }
    let routes: Vec<&str> = reports
        .iter()
        .map(|r| r["route"].as_str().unwrap())
        .collect();
    assert_eq!(routes, ["cmi_sum", "divergence", "logratio"]);
}

#[test]
fn compute_csv_has_one_record_per_step() {
    let instance = bsc_instance();
    let output = run(&[
        "compute",
        "--instance",
        instance.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "route,step,bits");
    // Three routes, each with one step row and one total row.
    assert_eq!(lines.len(), 7);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let instance = memory_instance();
    let out_a = scratch("cap_a.json");
    let out_b = scratch("cap_b.json");
    for out in [&out_a, &out_b] {
        let output = run(&[
            "capacity",
            "--instance",
            instance.to_str().unwrap(),
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn capacity_agrees_with_oracle_command() {
    let instance = memory_instance();
    let solver = run(&["capacity", "--instance", instance.to_str().unwrap()]);
    assert!(solver.status.success());
    let solver_bits = stdout_json(&solver)["value_bits"].as_f64().unwrap();

    let oracle = run(&[
        "oracle",
        "--instance",
        instance.to_str().unwrap(),
        "--grid",
        "64",
    ]);
    assert!(oracle.status.success());
    let oracle_bits = stdout_json(&oracle)["value_bits"].as_f64().unwrap();
    assert!(
        (solver_bits - oracle_bits).abs() < 1e-3,
        "solver {solver_bits} oracle {oracle_bits}"
    );
}

#[test]
fn rdf_requires_budget_and_solves_with_one() {
    let instance = bsc_instance();
    let missing = run(&["rdf", "--instance", instance.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));

    let solved = run(&[
        "rdf",
        "--instance",
        instance.to_str().unwrap(),
        "--distortion-budget",
        "0.1",
    ]);
    assert!(solved.status.success());
    let bits = stdout_json(&solved)["value_bits"].as_f64().unwrap();
    assert!((bits - 0.5310044064107189).abs() < 1e-6, "rate {bits}");
}

#[test]
fn validate_lists_violations_with_paths() {
    let good = bsc_instance();
    let output = run(&["validate", "--instance", good.to_str().unwrap()]);
    assert!(output.status.success());
    assert_eq!(stdout_json(&output), serde_json::json!([]));

    let bad = scratch("bad_row.json");
    fs::write(
        &bad,
        r#"{
  "horizon": 0,
  "x_sizes": [2],
  "y_sizes": [2],
  "input_kernels": [[[0.49, 0.49]]],
  "channel_kernels": [[[0.9, 0.1], [0.1, 0.9]]]
}"#,
    )
    .unwrap();
    let output = run(&["validate", "--instance", bad.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    let diags = stdout_json(&output);
    let list = diags.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert!(list[0].as_str().unwrap().contains("input_kernels[0][0]"));

    let negative = scratch("bad_negative.json");
    fs::write(
        &negative,
        r#"{
  "horizon": 0,
  "x_sizes": [2],
  "y_sizes": [2],
  "input_kernels": [[[1.2, -0.2]]],
  "channel_kernels": [[[0.9, 0.1], [0.1, 0.9]]]
}"#,
    )
    .unwrap();
    let output = run(&["validate", "--instance", negative.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
    let diags = stdout_json(&output);
    assert!(diags.as_array().unwrap()[0]
        .as_str()
        .unwrap()
        .contains("negative entry"));
}

#[test]
fn malformed_json_exits_with_parse_code() {
    let path = scratch("broken.json");
    fs::write(&path, "{ this is not json").unwrap();
    let output = run(&["compute", "--instance", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_rows_exit_with_invariant_code() {
    let path = scratch("unnormalized.json");
    fs::write(
        &path,
        r#"{
  "horizon": 0,
  "x_sizes": [2],
  "y_sizes": [2],
  "input_kernels": [[[0.7, 0.7]]],
  "channel_kernels": [[[0.9, 0.1], [0.1, 0.9]]]
}"#,
    )
    .unwrap();
    let output = run(&["compute", "--instance", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn properties_zero_trials_is_empty_and_clean() {
    let output = run(&["properties", "--trials", "0"]);
    assert!(output.status.success());
    assert_eq!(stdout_json(&output), serde_json::json!([]));
}

#[test]
fn properties_small_run_reports_all_suites() {
    let output = run(&["properties", "--trials", "5", "--seed", "11"]);
    assert!(output.status.success(), "{output:?}");
    let reports = stdout_json(&output);
    let list = reports.as_array().unwrap();
    assert_eq!(list.len(), 7);
    for report in list {
        assert_eq!(report["violations"].as_u64(), Some(0));
        assert_eq!(report["trials"].as_u64(), Some(5));
        assert_eq!(report["seed"].as_u64(), Some(11));
    }
}

#[test]
fn seed_env_var_is_overridden_by_flag() {
    let out_env = scratch("seed_env.json");
    let out_flag = scratch("seed_flag.json");
    let instance = memory_instance();
    let status = bin()
        .args([
            "capacity",
            "--instance",
            instance.to_str().unwrap(),
            "--out",
            out_env.to_str().unwrap(),
        ])
        .env("DIFLOW_SEED", "21")
        .status()
        .unwrap();
    assert!(status.success());
    let status = bin()
        .args([
            "capacity",
            "--instance",
            instance.to_str().unwrap(),
            "--seed",
            "21",
            "--out",
            out_flag.to_str().unwrap(),
        ])
        .env("DIFLOW_SEED", "999")
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(&out_env).unwrap(), fs::read(&out_flag).unwrap());
}

#[test]
fn reverse_and_variational_commands_report() {
    let instance = bsc_instance();
    let output = run(&["reverse", "--instance", instance.to_str().unwrap()]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    assert_eq!(report["route"].as_str(), Some("reverse"));
    assert_eq!(report["total_bits"].as_f64(), Some(0.0));

    let output = run(&["variational", "--instance", instance.to_str().unwrap()]);
    assert!(output.status.success());
    let report = stdout_json(&output);
    assert_eq!(report["reciprocity_holds"].as_bool(), Some(true));
    let di = report["di_bits"].as_f64().unwrap();
    let attained = report["objective_b_at_achiever"].as_f64().unwrap();
    assert!((di - attained).abs() < 1e-10);
}
