//! Experiment harness around `lcr-fista`: configuration, the batch runner,
//! trace export and the bound verifier behind the `lcr-fista` binary.

pub mod config;
pub mod experiment;
pub mod export;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, FamilyKind, SchemeKind};
pub use experiment::{run_experiment, run_trials, ExperimentReport, SchemeStats, TrialResult};
pub use export::{export_trace, TraceFormat};
pub use verify::{verify_bounds, VerifyReport};
