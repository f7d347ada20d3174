//! Command-line behaviour of the `bossl` binary.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bossl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bossl"))
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

#[test]
fn synth_pick_prints_program_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (c, csv) = (dir.path().join("pick.c"), dir.path().join("pick.csv"));
    let out = bossl()
        .arg("synth")
        .arg(corpus("pick.bossl"))
        .args(["--validate", "20", "--emit-c"])
        .arg(&c)
        .arg("--stats")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("*x = 30;"));
    assert!(fs::read_to_string(&c).unwrap().contains("((word *)x)[0] = 30;"));
    let stats = fs::read_to_string(&csv).unwrap();
    let mut lines = stats.lines();
    assert_eq!(lines.next(), Some("name,variant,mode,perturbation,time_ms,ast_size,rules,backtracks,outcome"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!((row[0], row[2], row[3], row[8]), ("pick", "imm", "0", "Synthesized"));
}

#[test]
fn missing_file_reports_no_goal() {
    let out = bossl().args(["synth", "missing.bossl"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no goal"));
}

#[test]
fn ill_formed_spec_fails() {
    let out = bossl()
        .arg("synth")
        .arg(corpus("negative/existential-perm.bossl"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("occurs only in the postcondition"));
}

#[test]
fn timeout_exits_nonzero() {
    let out = bossl()
        .arg("synth")
        .arg(corpus("tcopy.bossl"))
        .args(["--mode", "mut", "--timeout-ms", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Timeout"));
}

#[test]
fn bench_rows_are_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = bossl()
        .arg("bench")
        .arg(corpus(""))
        .args(["--only", "pick,reset", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    let keys: Vec<String> = rows.iter().map(|r| r.split(',').take(4).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(keys, ["pick,shape,imm,0", "pick,shape,mut,0", "reset,shape,imm,0", "reset,shape,mut,0"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("rules_median"));
}
