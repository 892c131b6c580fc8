//! IEC 61850 service semantics: message classes, slice profiles with SLAs,
//! per-slice traffic generation, and the self-healing fault script.

mod catalog;
mod traffic;

pub use catalog::{
    catalog_from_csv, catalog_to_csv, classify_message, service_catalog, ServiceCatalogEntry,
};
pub use traffic::{apply_fault_script, generate_traffic, FaultEvent, FaultKind, FaultScript};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum Iec61850Error {
    #[error("invalid traffic model: {0}")]
    Traffic(String),
    #[error("invalid fault script: {0}")]
    Script(String),
    #[error("unclassified message tag '{0}'")]
    Unclassified(String),
    #[error("catalog format: {0}")]
    Catalog(String),
}

/// The three RAN slices of the self-healing scenario.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum SliceId {
    Goose,
    Sv,
    Mms,
}

impl SliceId {
    pub const ALL: [SliceId; 3] = [SliceId::Goose, SliceId::Sv, SliceId::Mms];

    /// Lower value = more urgent.
    pub fn priority(self) -> u8 {
        match self {
            SliceId::Goose => 0,
            SliceId::Sv => 1,
            SliceId::Mms => 2,
        }
    }

    /// Standardized slice/service type (2 = uRLLC, 3 = mMTC).
    pub fn sst(self) -> u8 {
        match self {
            SliceId::Goose | SliceId::Sv => 2,
            SliceId::Mms => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SliceId::Goose => "goose",
            SliceId::Sv => "sv",
            SliceId::Mms => "mms",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "goose" => Some(SliceId::Goose),
            "sv" => Some(SliceId::Sv),
            "mms" => Some(SliceId::Mms),
            _ => None,
        }
    }
}

impl std::fmt::Display for SliceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Message arrival model for a slice's background traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ArrivalModel {
    /// Arrivals at k/rate for integer k (globally phase-anchored at t = 0).
    Periodic { rate_hz: f64 },
    /// Exponential inter-arrival times.
    Poisson { rate_hz: f64 },
    /// No background arrivals; the fault script injects.
    EventDriven,
}

/// One RAN slice's service contract and traffic shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub slice: SliceId,
    pub sst: u8,
    pub latency_sla_s: f64,
    pub reliability_target: f64,
    pub packet_bits: u64,
    /// Lower = more urgent.
    pub priority: u8,
    pub arrival: ArrivalModel,
}

impl SliceProfile {
    pub fn goose_default() -> Self {
        Self {
            slice: SliceId::Goose,
            sst: 2,
            latency_sla_s: 0.3e-3,
            reliability_target: 1.0 - 1e-5,
            packet_bits: 1096,
            priority: 0,
            arrival: ArrivalModel::Periodic { rate_hz: 1.0 },
        }
    }

    pub fn sv_default() -> Self {
        Self {
            slice: SliceId::Sv,
            sst: 2,
            latency_sla_s: 0.5e-3,
            reliability_target: 0.999,
            packet_bits: 1120,
            priority: 1,
            arrival: ArrivalModel::Periodic { rate_hz: 4000.0 },
        }
    }

    pub fn mms_default() -> Self {
        Self {
            slice: SliceId::Mms,
            sst: 3,
            latency_sla_s: 40e-3,
            reliability_target: 0.999,
            packet_bits: 8000,
            priority: 2,
            arrival: ArrivalModel::Poisson { rate_hz: 10.0 },
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(self.latency_sla_s > 0.0) {
            errors.push(format!("slices.{}: latency_sla must be > 0", self.slice));
        }
        if !(0.0..=1.0).contains(&self.reliability_target) {
            errors.push(format!(
                "slices.{}: reliability_target must be in [0,1]",
                self.slice
            ));
        }
        if self.packet_bits == 0 {
            errors.push(format!("slices.{}: packet_bits must be > 0", self.slice));
        }
        match self.arrival {
            ArrivalModel::Periodic { rate_hz } | ArrivalModel::Poisson { rate_hz } => {
                if !(rate_hz > 0.0) {
                    errors.push(format!("slices.{}: arrival rate must be > 0", self.slice));
                }
            }
            ArrivalModel::EventDriven => {}
        }
        errors
    }
}

/// One queued or in-flight message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub slice: SliceId,
    /// Source device index in the topology.
    pub source: usize,
    pub created_at: f64,
    pub bits: u64,
    pub deadline: f64,
}

impl Message {
    pub fn new(id: u64, profile: &SliceProfile, source: usize, created_at: f64) -> Self {
        Self {
            id,
            slice: profile.slice,
            source,
            created_at,
            bits: profile.packet_bits,
            deadline: created_at + profile.latency_sla_s,
        }
    }
}
