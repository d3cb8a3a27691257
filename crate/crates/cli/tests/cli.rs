use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathhedge"))
}

#[test]
fn price_prints_canonical_quote() {
    let out = bin()
        .args(["price", "--t0", "0", "--A0", "0", "--x0", "1", "--T", "1", "--K", "1", "--a", "0", "--b", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["price"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["delta"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn price_outside_band_is_an_error() {
    let out = bin()
        .args(["price", "--x0", "3", "--T", "1", "--K", "1", "--a", "0", "--b", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn integrate_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"scenario": {"class": "step", "n_paths": 20}, "integrand": "one"}"#).unwrap();
    let run = |seed: &str| {
        let out = bin()
            .args(["integrate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join(seed))
            .args(["--seed", seed, "--levels", "4..8"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join(seed).join("integrate.csv")).unwrap()
    };
    let a = run("3");
    assert_eq!(a, run("3"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("3").join("integrate.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["seed"], 3);
    assert_eq!(report["config"]["ladder"]["last_level"], 8);
}

#[test]
fn mismatched_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "verify"}"#).unwrap();
    let out = bin().args(["integrate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_invariant_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // An oracle this coarse cannot meet a 1e-9 tolerance.
    std::fs::write(
        &cfg,
        r#"{"oracle": [{"n_steps": 4, "value_grid": 8, "avg_grid": 8}], "oracle_tolerance": 1e-9}"#,
    )
    .unwrap();
    let out = bin()
        .args(["oracle-compare", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
