use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(args)
        .current_dir(workspace())
        .output()
        .unwrap()
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn replay_reports_the_published_statistics() {
    let o = bench(&[
        "replay",
        "--table2",
        "data/reference_table2.csv",
        "--table3",
        "data/reference_table3.csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for needle in [
        "13/15 (87%)",
        "11/15 (73%)",
        "9/15 (60%)",
        "10/15 (67%)",
        "V=20",
    ] {
        assert!(out.contains(needle), "missing {needle} in\n{out}");
    }
}

#[test]
fn replay_rejects_a_malformed_table() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("t2.csv");
    std::fs::write(&bad, "Dataset,oops\nWine,1\n").unwrap();
    let o = bench(&[
        "replay",
        "--table2",
        bad.to_str().unwrap(),
        "--table3",
        "data/reference_table3.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
}

fn write_suite(dir: &Path, runs: &str) -> PathBuf {
    let mut csv = String::from("u,v,y\n");
    for i in 0..80 {
        let (u, v) = (i as f64 / 10.0, ((i * 37) % 11) as f64);
        csv.push_str(&format!("{u},{v},{}\n", u.sin() * 3.0 + 0.2 * v));
    }
    std::fs::write(dir.join("toy.csv"), csv).unwrap();
    let manifest = dir.join("toy.manifest");
    std::fs::write(
        &manifest,
        format!("lime.n_samples = 300\ndataset.toy.path = toy.csv\ndataset.toy.target = y\n{runs}"),
    )
    .unwrap();
    manifest
}

#[test]
fn run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_suite(dir.path(), "run = toy 2\nrun = toy 1\n");
    let out = dir.path().join("out");
    let o = bench(&[
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("table2.csv").exists() && out.join("table3.csv").exists());
}

#[test]
fn partial_run_names_the_failed_stage() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_suite(dir.path(), "run = toy 2\nrun = toy 5\n");
    let out = dir.path().join("out");
    let o = bench(&[
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("select_features"));
}

#[test]
fn bad_manifest_fails() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("bad.manifest");
    std::fs::write(&manifest, "colour = blue\n").unwrap();
    let o = bench(&[
        "run",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        "unused",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn explain_prints_all_three_explanations() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_suite(dir.path(), "run = toy 2\nrun = toy 1\n");
    let o = bench(&[
        "explain",
        "--dataset",
        "toy",
        "--row",
        "3",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    for needle in [
        "tree:",
        "MLR contrib",
        "LIME contrib",
        "intercept",
        "prediction",
    ] {
        assert!(out.contains(needle), "missing {needle} in\n{out}");
    }
    let o = bench(&[
        "explain",
        "--dataset",
        "toy",
        "--row",
        "999",
        "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}
