//! The append-only metrics log and its manifest.

use crate::drl::{AllocationRecord, LearningRecord, PunctureRecord, TrainLog};
use crate::iec61850::SliceId;
use crate::radio::StepRecord;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const METRICSLOG_SCHEMA: &str = "gridslice-metricslog-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub config_hash: String,
    pub setup: String,
    pub seed: u64,
    pub code_version: String,
    /// False when a run aborted mid-way and the log is partial.
    pub complete: bool,
    pub total_slots: u64,
    pub total_injected: u64,
    pub starvation_events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub manifest: RunManifest,
    pub steps: Vec<StepRecord>,
    pub learning: Vec<LearningRecord>,
    pub allocations: Vec<AllocationRecord>,
    pub punctures: Vec<PunctureRecord>,
}

impl MetricsLog {
    pub fn from_train_log(
        log: TrainLog,
        config_hash: &str,
        setup: &str,
        seed: u64,
        complete: bool,
    ) -> Self {
        MetricsLog {
            manifest: RunManifest {
                schema: METRICSLOG_SCHEMA.to_string(),
                config_hash: config_hash.to_string(),
                setup: setup.to_string(),
                seed,
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                complete,
                total_slots: log.total_slots,
                total_injected: log.total_injected,
                starvation_events: log.starvation_events,
            },
            steps: log.steps,
            learning: log.learning,
            allocations: log.allocations,
            punctures: log.punctures,
        }
    }

    /// SHA-256 over the canonical JSON serialization; the determinism
    /// contract compares these.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("log serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Flat (slot, slice, violated) view for RSM accounting; every terminal
    /// record counts as a sample, drops as violations.
    pub fn observations(&self) -> Vec<(u64, SliceId, bool)> {
        self.steps
            .iter()
            .map(|r| (r.slot, r.slice, r.violated))
            .collect()
    }
}
