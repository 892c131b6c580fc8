//! Scenario configuration, experiment orchestration, metrics persistence,
//! summarization and export.

mod export;
mod metrics;
mod runner;
mod scenario;
mod summary;

pub use export::{
    export_log_csv, export_log_json, export_summary_csv, export_summary_json, import_log_json,
    import_steps_csv, import_summary_json, steps_to_csv,
};
pub use metrics::{MetricsLog, RunManifest};
pub use runner::{run_experiment, RunFailure};
pub use scenario::{
    apply_setup, diff_setups, load_scenario, load_scenario_str, FieldDelta, ScenarioConfig,
    SetupTag,
};
pub use summary::{
    compare_runs, summarize, ComparisonReport, RunSummary, SliceComparison, SliceWindowSummary,
    WindowSummary,
};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("io failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit category: 2 validation, 3 runtime, 4 io.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Validation(_) => 2,
            SimError::Runtime(_) => 3,
            SimError::Io { .. } => 4,
        }
    }
}
