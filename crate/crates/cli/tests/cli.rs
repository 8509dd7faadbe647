use std::path::Path;
use std::process::{Command, Output};

fn vortlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vortlab")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path, t_end: f64) -> String {
    let path = dir.join("small.toml");
    let text = format!(
        "seed = 3\n\n[solver]\nn = 16\ndt = 0.01\nt_end = {t_end}\nsnapshot_stride = 5\n\n[solver.initial.random]\nmax_mode = 3\n\n[probes]\npoints = [[0.3, 0.2, 0.1]]\n"
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn identical_seeds_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0.2);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = vortlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ma, mb) = (std::fs::read(a.join("manifest.json")).unwrap(), std::fs::read(b.join("manifest.json")).unwrap());
    let outputs = manifest(&a)["outputs"].as_array().unwrap().clone();
    assert!(outputs.iter().any(|o| o["path"] == "energy.csv"));
    for o in &outputs {
        let rel = o["path"].as_str().unwrap();
        assert_eq!(std::fs::read(a.join(rel)).unwrap(), std::fs::read(b.join(rel)).unwrap(), "{rel}");
    }
    let strip = |m: &[u8]| String::from_utf8_lossy(m).replace(a.to_str().unwrap(), "").replace(b.to_str().unwrap(), "");
    assert_eq!(strip(&ma), strip(&mb));
}

#[test]
fn zero_end_time_keeps_one_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0.0);
    let out = dir.path().join("zero");
    let o = vortlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["snapshots"], 1);
    assert!(m["stages"].as_array().unwrap().iter().all(|s| s["status"] != "failed"));
    let energy = std::fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 2);
}

#[test]
fn single_stage_subcommand_writes_its_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 0.1);
    let out = dir.path().join("loc");
    let o = vortlab(&["localize", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("localization.csv").exists());
    assert!(!out.join("degiorgi.csv").exists());
    assert_eq!(manifest(&out)["seed"], 9);
}

#[test]
fn verify_identities_passes_with_json_verdicts() {
    let o = vortlab(&["verify", "identities"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["criterion"], 1);
    assert_eq!(v[0]["passed"], true);
}

#[test]
fn tampered_tolerance_fails_with_criterion_id() {
    let o = vortlab(&["verify", "identities", "--tamper", "1"]);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["passed"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("criterion 1 FAIL"));
}

#[test]
fn unknown_suite_and_bad_config_are_errors() {
    let o = vortlab(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "solver.initial_file = \"missing.vlf1\"\n").unwrap();
    let o = vortlab(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
