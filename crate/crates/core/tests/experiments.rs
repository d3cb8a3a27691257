use std::fs;

use pathhedge::harness::{run_experiment, ExperimentConfig, ExperimentKind, LadderConfig};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::for_kind(kind);
    c.scenario.n_paths = 9;
    c.scenario.samples = 64;
    c.ladder = LadderConfig {
        first_level: 5,
        last_level: 9,
    };
    c.oracle.truncate(1);
    c
}

#[test]
fn every_kind_writes_reproducible_tables() {
    for kind in ExperimentKind::ALL {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(kind);
        let a = run_experiment(&cfg, &dir.path().join("a")).unwrap();
        let b = run_experiment(&cfg, &dir.path().join("b")).unwrap();
        let csv = format!("{}.csv", kind.name());
        let body = fs::read(dir.path().join("a").join(&csv)).unwrap();
        assert_eq!(body, fs::read(dir.path().join("b").join(&csv)).unwrap(), "{csv}");
        assert!(body.len() > 20, "{csv} is empty");
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(a.passed, a.checks.iter().all(|c| c.passed));
        assert!(a.failures.is_empty(), "{:?}", a.failures);
        let json: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("a").join(format!("{}.json", kind.name()))).unwrap())
                .unwrap();
        assert_eq!(json["report"]["seed"], 7);
        assert_eq!(json["config"]["kind"], kind.name());
    }
}

#[test]
fn coarse_backtest_still_dominates() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_experiment(&small(ExperimentKind::SuperhedgeBacktest), dir.path()).unwrap();
    let domination = r.checks.iter().find(|c| c.name == "domination").unwrap();
    assert!(domination.passed);
    let discrete = r.checks.iter().find(|c| c.name == "discrete_pnl_identity").unwrap();
    assert!(discrete.passed, "{discrete:?}");
}

#[test]
fn config_hash_tracks_content() {
    let a = ExperimentConfig::default();
    let mut b = a.clone();
    b.scenario.seed += 1;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash(), ExperimentConfig::default().hash());
}
