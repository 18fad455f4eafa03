use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scars(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scars"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Splits a CSV artifact into its metadata line, header and rows.
fn parse_csv(text: &str) -> (Value, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let meta = lines.next().and_then(|l| l.strip_prefix("# ")).expect("metadata line");
    let header = lines.next().expect("header").split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (serde_json::from_str(meta).unwrap(), header, rows)
}

fn dir_contents(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn spectrum_csv_has_metadata_and_schema() {
    let o = scars(&["spectrum", "--n", "8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (meta, header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header, ["n", "E_n", "overlap", "is_scar", "is_zero_mode"]);
    assert_eq!(meta["command"], "spectrum");
    assert_eq!(meta["config"]["n"], 8);
    assert_eq!(meta["config"]["bc"], "pbc");
    assert!(meta["version"].is_string());
    // k0 ⊕ kπ at N = 8: 8 + 7 states.
    assert_eq!(rows.len(), 15);
    let scars: usize = rows.iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    assert_eq!(scars, 9);
}

#[test]
fn headers_of_tabular_commands() {
    let cases: [(&[&str], &[&str]); 5] = [
        (
            &["eigenstate-qfi", "--n", "6"],
            &["n", "E_n", "f_Q", "overlap", "witness_m"],
        ),
        (
            &["quench", "--n", "6", "--t-max", "2"],
            &["t", "f_Q", "M_S", "M_S2", "fidelity"],
        ),
        (
            &["su2-tower", "--n", "4"],
            &["n", "f_Q_closed_form", "f_Q_oracle", "jpjm_density"],
        ),
        (&["basis", "--n", "4"], &["ordinal", "bitstring"]),
        (&["operator", "--n", "4", "--which", "ms"], &["row", "col", "value"]),
    ];
    for (args, expect) in cases {
        let o = scars(args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let (_, header, _) = parse_csv(&stdout(&o));
        assert_eq!(header, expect, "{args:?}");
    }
}

#[test]
fn mps_check_reports_exact_ring_value() {
    let o = scars(&["mps-check", "--n", "8", "--kind", "phi1"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let row = &doc["rows"][0];
    assert_eq!(row["f_Q_closed_exact"], "80/21");
    let dense = row["f_Q_dense"].as_f64().unwrap();
    assert!((dense - 80.0 / 21.0).abs() < 1e-12);
    assert!(row["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn identical_configs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        let o = scars(&["eigenstate-qfi", "--n", "8", "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let (ca, cb) = (dir_contents(&a), dir_contents(&b));
    let names: Vec<&str> = ca.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["eigenstate_qfi.csv", "run.json", "summary.json"]);
    for ((na, ta), (nb, tb)) in ca.iter().zip(&cb) {
        assert_eq!(na, nb);
        if na != "run.json" {
            assert_eq!(ta, tb, "{na} differs between runs");
        }
    }
    let run: Value = serde_json::from_str(&ca[1].1).unwrap();
    assert_eq!(run["passed"], true);
    assert!(run["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn refuses_to_overwrite_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let d = dir.to_str().unwrap();
    assert_eq!(code(&scars(&["basis", "--n", "4", "--out", d])), 0);
    let before = dir_contents(&dir);
    let o = scars(&["basis", "--n", "6", "--out", d]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not empty"));
    assert_eq!(dir_contents(&dir), before);
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"n": 6, "bc": "obc", "omega": 2.0}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let (meta, _, rows) = parse_csv(&stdout(&scars(&["basis", "--config", c])));
    assert_eq!(meta["config"]["bc"], "obc");
    // Open chain of 6 sites: F_8 = 21 configurations.
    assert_eq!(rows.len(), 21);
    let (meta, _, rows) = parse_csv(&stdout(&scars(&["basis", "--config", c, "--n", "8", "--bc", "pbc"])));
    assert_eq!(meta["config"]["n"], 8);
    assert_eq!(meta["config"]["omega"], 2.0);
    assert_eq!(rows.len(), 47);

    fs::write(&cfg, r#"{"n": 6, "typo": 1}"#).unwrap();
    assert_eq!(code(&scars(&["basis", "--config", c])), 2);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["spectrum", "--n", "7"][..],
        &["quench", "--initial", "random"],
        &["spectrum", "--bc", "obc", "--sector", "k0"],
        &["spectrum", "--dt", "0"],
        &["no-such-command"],
    ] {
        let o = scars(args);
        assert_eq!(code(&o), 2, "{args:?}");
    }
}

#[test]
fn computation_errors_exit_with_one() {
    // Too many sites for the bit-packed basis.
    let o = scars(&["basis", "--n", "40"]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn selftest_passes_and_detects_an_injected_fault() {
    let ok = scars(&["selftest"]);
    assert_eq!(code(&ok), 0);
    let doc: Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert!(doc["result"].get("elapsed_seconds").is_none());
    assert!(String::from_utf8_lossy(&ok.stderr).contains("PASS operator-hermiticity"));

    let bad = scars(&["selftest", "--inject-fault"]);
    assert_eq!(code(&bad), 1);
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("FAIL operator-hermiticity"), "{err}");
}

#[test]
fn random_quench_reports_spread() {
    let o = scars(&[
        "quench",
        "--n",
        "6",
        "--initial",
        "random",
        "--seed",
        "3",
        "--samples",
        "4",
        "--t-max",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (meta, header, rows) = parse_csv(&stdout(&o));
    assert_eq!(header.last().unwrap(), "f_Q_std");
    assert_eq!(meta["config"]["seed"], 3);
    assert_eq!(rows.len(), 5);
}
