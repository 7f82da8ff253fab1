//! Whole-run behaviour on small synthetic datasets written to temp dirs.

mod common;

use std::fmt::Write as _;
use std::path::Path;

use common::*;
use surrogate_fidelity::experiment::{
    replay_tables, run_one, run_suite, write_outputs, RunConfig, Suite,
};

/// A smooth nonlinear target over four features.
fn write_synthetic(dir: &Path, name: &str, n: usize, constant: bool) {
    let mut r = rng(n as u64);
    let x = random_matrix(&mut r, n, 4, -2.0, 2.0);
    let mut text = String::from("a,b,c,d,y\n");
    for row in x.rows() {
        let y = if constant {
            3.0
        } else {
            (row[0]).sin() * 2.0 + row[1] * row[1] - 0.5 * row[2] + 0.1 * row[3]
        };
        writeln!(text, "{},{},{},{},{}", row[0], row[1], row[2], row[3], y).unwrap();
    }
    std::fs::write(dir.join(format!("{name}.csv")), text).unwrap();
}

fn suite(dir: &Path, extra: &str) -> Suite {
    let text = format!(
        "seed = 9\nlime.n_samples = 400\n\
         dataset.synth.path = synth.csv\ndataset.synth.target = y\n\
         dataset.flat.path = flat.csv\ndataset.flat.target = y\n{extra}"
    );
    Suite::parse(&text, dir).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(dir.path(), "synth", 120, false);
    write_synthetic(dir.path(), "flat", 60, true);
    dir
}

fn config(dir: &Path, runs: &str) -> Vec<RunConfig> {
    suite(dir, runs).configs()
}

#[test]
fn same_config_gives_identical_records() {
    let dir = setup();
    let c = &config(dir.path(), "run = synth 3\n")[0];
    let a = run_one(c).unwrap();
    let b = run_one(c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_train + a.n_test, 120);
    assert_eq!(a.n_test, 24);
    assert_eq!(a.feature_names.len(), 3);
    assert!(a.fidelity.rmse_tree.is_finite() && a.fidelity.rmse_lime.is_finite());
}

#[test]
fn different_seeds_change_the_run() {
    let dir = setup();
    let cs = config(dir.path(), "run = synth 3 1\nrun = synth 3 2\n");
    let (a, b) = (run_one(&cs[0]).unwrap(), run_one(&cs[1]).unwrap());
    assert_ne!(a.fidelity, b.fidelity);
}

#[test]
fn constant_target_gives_zero_rmse_and_fails_gate() {
    let dir = setup();
    let c = &config(dir.path(), "run = flat 2\n")[0];
    let r = run_one(c).unwrap();
    assert!(r.fidelity.rmse_tree < 1e-9, "{:?}", r.fidelity);
    assert!(r.fidelity.rmse_mlr < 1e-9, "{:?}", r.fidelity);
    assert!(r.fidelity.rmse_lime < 1e-9, "{:?}", r.fidelity);
    assert!(!r.gate_passed);
}

#[test]
fn gate_matches_stored_direct_rmses() {
    let dir = setup();
    let s = run_suite(&config(
        dir.path(),
        "run = synth 4\nrun = synth 2\nrun = flat 3\n",
    ))
    .unwrap();
    let mut flagged = 0;
    for r in s.outcomes.iter().flatten() {
        assert_eq!(r.gate_passed, r.direct_rmse_mlr > r.direct_rmse_svr);
        flagged += !r.gate_passed as usize;
    }
    assert_eq!(s.gate_failures().len(), flagged);
    // the nonlinear target is worth explaining
    assert!(s.outcomes[0].as_ref().unwrap().gate_passed);
}

#[test]
fn failing_stage_is_named() {
    let dir = setup();
    let cs = config(dir.path(), "run = synth 9\nrun = synth 2\n");
    let s = run_suite(&cs).unwrap();
    let f = s.outcomes[0].as_ref().unwrap_err();
    assert_eq!(f.stage, Some("select_features"));
    assert_eq!(s.n_failed(), 1);
    assert_eq!(s.table2.len(), 1);
}

#[test]
fn unreadable_file_fails_at_load() {
    let dir = setup();
    let cs = config(
        dir.path(),
        "dataset.gone.path = gone.csv\ndataset.gone.target = y\nrun = gone 2\nrun = synth 2\n",
    );
    let s = run_suite(&cs).unwrap();
    assert_eq!(s.outcomes[0].as_ref().unwrap_err().stage, Some("load"));
    assert!(s.outcomes[1].is_ok());
}

#[test]
fn suite_needs_two_runs() {
    let dir = setup();
    assert!(run_suite(&config(dir.path(), "run = synth 2\n")).is_err());
}

#[test]
fn identical_runs_still_complete_the_suite() {
    let dir = setup();
    let s = run_suite(&config(dir.path(), "run = synth 2 5\nrun = synth 2 5\n")).unwrap();
    assert_eq!(s.table2.len(), 2);
    assert_eq!(s.table2[0], s.table2[1]);
    // paired columns from repeated runs carry tied differences; each
    // comparison either computes or says why it could not
    for c in s.stats.comparisons() {
        match &c.result {
            Ok(w) => assert!(w.p_two_sided > 0.0 && w.p_two_sided <= 1.0),
            Err(msg) => assert!(!msg.is_empty()),
        }
    }
}

#[test]
fn written_tables_replay_to_the_same_statistics() {
    let dir = setup();
    let s = run_suite(&config(
        dir.path(),
        "run = synth 4\nrun = synth 3\nrun = synth 2\n",
    ))
    .unwrap();
    let out = dir.path().join("out");
    write_outputs(&s, &out).unwrap();
    let replayed = replay_tables(&out.join("table2.csv"), &out.join("table3.csv")).unwrap();
    assert_eq!(replayed.table2, s.table2);
    assert_eq!(replayed.table3, s.table3);
    assert_eq!(replayed.stats, s.stats);
    for name in ["summary.csv", "report.md", "runs.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(out.join("runs").join("run01_synth_4_rules.txt").exists());
}

#[test]
fn fidelity_can_be_measured_against_the_targets() {
    let dir = setup();
    let bb = &config(dir.path(), "run = synth 3\n")[0];
    let truth = &config(dir.path(), "fidelity_reference = truth\nrun = synth 3\n")[0];
    let (a, b) = (run_one(bb).unwrap(), run_one(truth).unwrap());
    assert_eq!(a.direct_rmse_svr, b.direct_rmse_svr);
    assert_ne!(a.fidelity, b.fidelity);
}
