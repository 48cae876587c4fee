//! Experiment harness around `difftransfer-core`: JSON experiment configs,
//! seeded runs persisted as self-verifying records, aggregated metrics,
//! reward-model landscapes and a gradient check.

pub mod canonical;
pub mod config;
mod error;
pub mod gradcheck;
pub mod landscape;
pub mod metrics;
pub mod record;

pub use config::{ExperimentConfig, RewardSpec, TargetSpec};
pub use error::{exit, BenchError, Result};
pub use metrics::{aggregate, MetricsRow, MetricsTable};
pub use record::{load_records, persist, run_experiment, verify_record, Outcome, RunRecord};
