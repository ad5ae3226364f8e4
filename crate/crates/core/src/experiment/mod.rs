//! Orchestration of modifier x provider runs and the run journal.

mod execute;
mod journal;
mod plan;
mod provider;

pub use execute::{execute, variant_quality, ExecuteOptions};
pub use journal::{Journal, JournalWriter, RunFilter, RunRecord, RunStatus};
pub use plan::{plan_experiment, EvalSettings, ExperimentConfig, ExperimentPlan, PlannedRun};
pub use provider::{PredictionProvider, ProviderMode};
