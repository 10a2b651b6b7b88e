//! Regenerates the shipped figure-config summaries and compares them
//! byte-for-byte (everything in the summary is deterministic).

use std::fs;
use std::path::{Path, PathBuf};

use dqn_core::harness::{load_config, run_compare, write_outputs};

fn repo_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn check_summary(config: &str, expected: &str) {
    let spec = load_config(&repo_path(config)).unwrap();
    let outcome = run_compare(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_outputs(&outcome.runs, &spec, dir.path()).unwrap();
    let summary = files
        .iter()
        .find(|p| p.to_string_lossy().ends_with("summary.txt"))
        .unwrap();
    let regenerated = fs::read_to_string(summary).unwrap();
    let shipped = fs::read_to_string(repo_path(expected)).unwrap();
    assert_eq!(regenerated, shipped, "{config} summary drifted");
}

#[test]
fn fig1a_summary_matches() {
    check_summary("configs/fig1a.json", "configs/expected/fig1a_summary.txt");
}

#[test]
fn fig3a_summary_matches() {
    check_summary("configs/fig3a.json", "configs/expected/fig3a_summary.txt");
}

#[test]
fn fig3b_summary_matches() {
    check_summary("configs/fig3b.json", "configs/expected/fig3b_summary.txt");
}
