//! Scenario corpora and reproducible experiment runs (f64 only).

mod experiment;
mod scenario;

pub use experiment::{
    run_experiment, state_path, strategy_ref, Check, ExperimentConfig, ExperimentKind, ExperimentReport,
    LadderConfig, Table, ORACLE_TIE,
};
pub use scenario::{generate_scenarios, ScenarioClass, ScenarioSpec};
