//! End-to-end runs of the command line through the in-process entry point.

use super::*;
use shearlab::group::GroupSpec;
use shearlab::orbit::brute_force_count_xy;
use std::path::Path;

fn exec(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["shearlab"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(csv_text.as_bytes()).records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

fn files_in(dir: &Path) -> usize {
    std::fs::read_dir(dir).unwrap().count()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(exec(&["--help"]).0, 0);
    let (code, out, _) = exec(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_subcommand_and_bad_flags_are_validation_errors() {
    assert_eq!(exec(&["frobnicate"]).0, 2);
    assert_eq!(exec(&["count"]).0, 2);
    assert_eq!(exec(&["count", "--T", "abc"]).0, 2);
    assert_eq!(exec(&["count", "--T", "8,4"]).0, 2);
    assert_eq!(exec(&["count", "--T", "4", "--threads", "0"]).0, 2);
}

#[test]
fn count_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("counts.csv");
    let (code, _, _) = exec(&["count", "--group", "psl2z", "--x0", "0,1,0", "--T", "4,8,16", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(r.len(), 3);
    for row in r {
        let t: f64 = row[0].parse().unwrap();
        let n: u64 = row[1].parse().unwrap();
        assert_eq!(row[2], "true");
        assert_eq!(n, brute_force_count_xy(&GroupSpec::psl2z(), Norm::Sup, t).unwrap());
    }
    assert!(output::manifest_path(&out).is_file());
}

#[test]
fn invalid_group_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let (code, stdout, stderr) = exec(&["count", "--group", "nonexistent", "--T", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    assert!(stderr.contains("nonexistent"));
    assert_eq!(files_in(dir.path()), 0);
}

#[test]
fn exhausted_budget_writes_partial_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let (code, _, _) = exec(&["count", "--T", "50,100", "--max-nodes", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3);
    let r = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(r.len(), 2);
    assert!(r.iter().all(|row| row[2] == "false"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(output::manifest_path(&out)).unwrap()).unwrap();
    assert_eq!(m["status"], "budget_exhausted");
    assert_eq!(m["exit_code"], 3);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        vec!["coset-count", "--group", "thin4", "--q", "3", "--T", "10,20,40"],
        vec!["eisenstein", "--z", "0.1,1.2", "--z", "-0.3,0.9", "--s", "1,1.5,3"],
        vec!["shear", "--T", "0,5", "--psi", "bump:cy=1.8", "--seed", "7"],
    ] {
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        for p in [&a, &b] {
            let mut args = cmd.clone();
            args.extend(["--out", p.to_str().unwrap()]);
            assert_eq!(exec(&args).0, 0, "{cmd:?}");
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd:?}");
    }
}

#[test]
fn fit_reads_count_output() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    assert_eq!(exec(&["count", "--T", "10,20,40,80,160", "--out", counts.to_str().unwrap()]).0, 0);
    let (code, out, _) = exec(&["fit", "--input", counts.to_str().unwrap(), "--model", "t-log-t-plus-t,linear"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0][0], "t_log_t_plus_t");
    let res: f64 = r[0][4].parse().unwrap();
    let lin: f64 = r[1][4].parse().unwrap();
    assert!(res < lin, "{res} vs {lin}");
    assert_eq!(exec(&["fit", "--input", dir.path().join("missing.csv").to_str().unwrap()]).0, 2);
}

#[test]
fn coset_counts_partition_the_total() {
    let (code, out, _) = exec(&["coset-count", "--group", "thin4", "--q", "3", "--T", "10,30"]);
    assert_eq!(code, 0);
    for row in rows(&out) {
        let total: u64 = row[1].parse().unwrap();
        let parts: u64 = row[3..].iter().map(|v| v.parse::<u64>().unwrap()).sum();
        assert_eq!(total, parts);
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    assert_eq!(exec(&["count", "--group", "thin4", "--T", "10,20", "--norm", "euclidean", "--out", first.to_str().unwrap()]).0, 0);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(output::manifest_path(&first)).unwrap()).unwrap();
    assert_eq!(m["status"], "ok");
    let mut cfg = m["config"].clone();
    let second = dir.path().join("second.csv");
    cfg["out"] = serde_json::json!(second);
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();
    assert_eq!(exec(&["run", "--config", cfg_path.to_str().unwrap()]).0, 0);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    std::fs::write(&cfg_path, r#"{"subcommand":"count","T":[4],"unknown_key":1}"#).unwrap();
    assert_eq!(exec(&["run", "--config", cfg_path.to_str().unwrap()]).0, 2);
}

#[test]
fn thread_cap_sources() {
    assert_eq!(threads_from_env(None).unwrap(), None);
    assert_eq!(threads_from_env(Some("3")).unwrap(), Some(3));
    assert!(threads_from_env(Some("0")).is_err());
    assert!(threads_from_env(Some("many")).is_err());
    let (one, _, _) = exec(&["count", "--T", "10,20", "--threads", "1"]);
    let (four, _, _) = exec(&["count", "--T", "10,20", "--threads", "4"]);
    assert_eq!((one, four), (0, 0));
    assert_eq!(exec(&["count", "--T", "10,20", "--threads", "1"]).1, exec(&["count", "--T", "10,20", "--threads", "4"]).1);
}

#[test]
fn selftest_passes() {
    let (code, out, err) = exec(&["selftest"]);
    assert_eq!(code, 0, "{out}\n{err}");
    assert!(rows(&out).iter().all(|r| r[4] == "true"));
}

#[test]
fn kronecker_gap_is_small() {
    let (code, out, _) = exec(&["kronecker", "--terms", "400"]);
    assert_eq!(code, 0);
    let gap: f64 = rows(&out)[0][2].parse().unwrap();
    assert!(gap < 1e-8, "{gap}");
}
