use std::fs;
use std::process::{Command, Output};

fn rgg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn threshold_at_one_half_is_zero() {
    let o = rgg(&["threshold", "-p", "0.5", "-d", "12"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "t=0 s=0");
}

#[test]
fn two_point_clique_is_a_single_edge() {
    let o = rgg(&["estimate-clique", "-n", "2", "-d", "6", "-p", "0.3", "--samples", "400000", "--shards", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let (value, se): (f64, f64) = (row[6].parse().unwrap(), row[7].parse().unwrap());
    assert!((value - 0.3f64.ln()).abs() < 3.5 * se, "{text}");
}

#[test]
fn estimate_edges_lists_all_methods() {
    let o = rgg(&[
        "estimate-edges", "-n", "6", "-d", "5", "-p", "0.3", "-e", "0.5", "--method", "all", "--samples", "2000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("bound=er_type") && text.contains("bound=bias_type"));
    assert!(text.contains(",naive,") && text.contains(",tilted,"));
}

#[test]
fn fit_selects_the_planted_regime() {
    let o = rgg(&["fit"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["selected"], "n_sqrt_d");
}

#[test]
fn path_simulators_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = rgg(&["cap-process", "-n", "4", "-d", "6", "-p", "0.4", "--samples", "3", "--out", out]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("eta_paths.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    let o = rgg(&["mgf-process", "-n", "4", "-d", "6", "-p", "0.4", "--samples", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("path_id,k,m_k\n"));
}

#[test]
fn oracle_prints_single_cell() {
    let o = rgg(&["oracle", "-p", "0.5", "-d", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = v[0]["clique3"].as_f64().unwrap();
    assert!((c - (0.25 - 0.25 / std::f64::consts::PI)).abs() < 1e-10);
}

#[test]
fn scan_writes_cells_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"model": "gauss", "event": "clique",
            "grid": {"n": [3], "d": [4, 5, 6], "p": [0.4]},
            "estimators": [{"kind": "naive"}, {"kind": "closed_form"}],
            "samples": 1000, "master_seed": 3, "shards": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rgg(&["scan", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.starts_with("n,d,p,epsilon,event,method,log_value,log_stderr,n_samples,seed,flags\n"));
    assert!(out.join("cell_0002.json").exists());
}

#[test]
fn scan_reports_cell_failures_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"model": "gauss", "event": "edge_dev",
            "grid": {"n": [6], "d": [2, 4], "p": [0.3], "epsilon": [0.5]},
            "estimators": [{"kind": "closed_form"}],
            "samples": 10, "master_seed": 3}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = rgg(&["scan", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_and_fatal_errors_are_nonzero() {
    assert_eq!(rgg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(rgg(&["threshold", "-p", "0.5", "-d", "4", "--bogus"]).status.code(), Some(2));
    assert_eq!(rgg(&["threshold", "-p", "0.9", "-d", "4"]).status.code(), Some(2));
    assert_eq!(rgg(&["scan"]).status.code(), Some(2));
}
