//! End-to-end tests of the command-line interface: golden evaluation,
//! byte-determinism of emitted artifacts, scan shapes, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kalab")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

struct Workdir(PathBuf);

impl Workdir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("kalab-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("workdir created");
        Workdir(dir)
    }

    fn file(&self, name: &str, content: &str) -> String {
        let path = self.0.join(name);
        std::fs::write(&path, content).expect("file written");
        path.to_str().expect("utf-8 path").to_string()
    }

    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for Workdir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn diag_json(d: &[f64]) -> String {
    let n = d.len();
    let mut entries = vec![0.0; n * n];
    for (i, v) in d.iter().enumerate() {
        entries[i * n + i] = *v;
    }
    serde_json::json!({ "n": n, "entries": entries }).to_string()
}

#[test]
fn eval_geometric_commuting_pair() {
    let w = Workdir::new("eval");
    let a = w.file("a.json", &diag_json(&[1.0, 4.0]));
    let b = w.file("b.json", &diag_json(&[4.0, 1.0]));
    let out = run(&["eval", "--mean", "geometric", "--a", &a, "--b", &b]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(parsed["n"], 2);
    let entries: Vec<f64> =
        parsed["entries"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let expect = [2.0, 0.0, 0.0, 2.0];
    for (got, want) in entries.iter().zip(expect) {
        assert!((got - want).abs() < 1e-12, "entries {entries:?}");
    }
}

#[test]
fn eval_writes_output_file() {
    let w = Workdir::new("evalout");
    let a = w.file("a.json", &diag_json(&[1.0, 4.0]));
    let b = w.file("b.json", &diag_json(&[4.0, 1.0]));
    let out_path = w.path().join("result.json");
    let out = run(&[
        "eval",
        "--mean",
        "arithmetic",
        "--a",
        &a,
        "--b",
        &b,
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.ends_with('\n'));
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries: Vec<f64> =
        parsed["entries"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(entries, vec![2.5, 0.0, 0.0, 2.5]);
}

#[test]
fn check_order_output_is_byte_identical_across_runs() {
    let args = [
        "check-order",
        "--mean",
        "power:0.5",
        "--n",
        "3",
        "--trials",
        "6",
        "--master-seed",
        "7",
        "--budget",
        "30",
    ];
    let first = run(&args);
    assert!(first.status.success(), "stderr: {}", String::from_utf8_lossy(&first.stderr));
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);

    let records: Vec<serde_json::Value> = serde_json::from_str(&stdout_str(&first)).unwrap();
    assert_eq!(records.len(), 6);
    for rec in &records {
        let kind = rec["kind"].as_str().unwrap();
        let loewner = rec["loewner"].as_bool().unwrap();
        let witness_present = !rec["witness"].is_null();
        match kind {
            "ordered" => {
                assert!(loewner && !witness_present);
                assert!(rec["norm_dominated"].as_bool().unwrap());
            }
            "unordered" | "congruent-diagonal" => {
                assert!(!loewner && witness_present);
                assert!(!rec["norm_dominated"].as_bool().unwrap());
            }
            other => panic!("unexpected kind {other}"),
        }
    }
}

#[test]
fn scan_prop3_csv_reaches_target() {
    let out = run(&["scan-prop3", "--n", "3", "--master-seed", "1"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,value,target");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 21);
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    let (s, value, target) = (last[0], last[1], last[2]);
    assert_eq!(s, (2.0f64).powi(20));
    assert!((value - target).abs() <= 1e-6, "final value {value}, target {target}");
}

#[test]
fn scan_e1_csv_reaches_target() {
    let out = run(&["scan-e1", "--n", "3", "--master-seed", "1"]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 25);
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - last[2]).abs() <= 1e-5, "final value {}, target {}", last[1], last[2]);
}

#[test]
fn witness_found_for_flipped_pair_and_absent_for_ordered() {
    let w = Workdir::new("witness");
    let a = w.file("a.json", &diag_json(&[2.0, 1.0]));
    let b = w.file("b.json", &diag_json(&[1.0, 2.0]));
    let out = run(&["witness", "--mean", "geometric", "--a", &a, "--b", &b]);
    assert!(out.status.success());
    let parsed: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(parsed["projection_rank"], 1);
    assert!(parsed["margin"].as_f64().unwrap() > parsed["threshold"].as_f64().unwrap());

    let c = w.file("c.json", &diag_json(&[2.0, 3.0]));
    let out = run(&["witness", "--mean", "geometric", "--a", &a, "--b", &c]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out), "null\n");
}

#[test]
fn usage_errors_exit_two() {
    let w = Workdir::new("errors");
    let a = w.file("a.json", &diag_json(&[1.0, 2.0]));

    // Unknown mean selector.
    let out = run(&["eval", "--mean", "power:3", "--a", &a, "--b", &a]);
    assert_eq!(out.status.code(), Some(2));

    // Missing input file.
    let out = run(&["eval", "--mean", "geometric", "--a", "/nonexistent.json", "--b", &a]);
    assert_eq!(out.status.code(), Some(2));

    // Malformed JSON.
    let bad = w.file("bad.json", "{\"n\": 2, \"entries\": [1, 2, 3]}");
    let out = run(&["eval", "--mean", "geometric", "--a", &bad, "--b", &a]);
    assert_eq!(out.status.code(), Some(2));

    // Asymmetric matrix.
    let asym = w.file("asym.json", "{\"n\": 2, \"entries\": [1.0, 0.5, -0.5, 1.0]}");
    let out = run(&["eval", "--mean", "geometric", "--a", &asym, "--b", &a]);
    assert_eq!(out.status.code(), Some(2));

    // Indefinite matrix in the definite slot.
    let indef = w.file("indef.json", &diag_json(&[1.0, -1.0]));
    let out = run(&["eval", "--mean", "geometric", "--a", &indef, "--b", &a]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown subcommand flags come from the parser with the same code.
    let out = run(&["scan-e1", "--max-exp", "99"]);
    assert_eq!(out.status.code(), Some(2));

    // A mean without a measure cannot drive the shifted-projection scan.
    let out = run(&["scan-e1", "--mean", "power:0.5", "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn master_seed_env_variable_is_honored() {
    let args = ["scan-prop3", "--n", "3", "--trial", "0"];
    let from_env = Command::new(bin())
        .args(args)
        .env("KA_MASTER_SEED", "1")
        .output()
        .expect("binary runs");
    assert!(from_env.status.success());
    let from_flag = run(&["scan-prop3", "--n", "3", "--trial", "0", "--master-seed", "1"]);
    assert_eq!(from_env.stdout, from_flag.stdout);
    let default_run = run(&args);
    assert_ne!(from_env.stdout, default_run.stdout);
}
