//! The framework control elements: RANA deployment index, RIL isolation
//! policy, RSF numerology/tiling/puncturing, and the RSM SLA monitor.

mod puncture;
mod rsm;

pub use puncture::{puncture, PunctureEvent, PunctureOutcome};
pub use rsm::{rsm_check, rsm_violation_rate, rsm_windows_csv, SlaRecord, SliceRate};

use crate::iec61850::SliceId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error)]
pub enum SlicingError {
    #[error("configuration error: {0}")]
    Config(String),
}

/// RAN deployment architecture index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RanaIndex {
    Centralized,
    Hybrid,
    Distributed,
}

/// Per-index processing delays. Distributed placement puts baseband
/// functions near the radio units, so its delay is the smallest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RanaDelays {
    pub centralized_s: f64,
    pub hybrid_s: f64,
    pub distributed_s: f64,
}

impl Default for RanaDelays {
    fn default() -> Self {
        Self {
            centralized_s: 1.0e-3,
            hybrid_s: 0.3e-3,
            distributed_s: 0.05e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RanaConfig {
    pub index: RanaIndex,
    pub delays: RanaDelays,
}

impl Default for RanaConfig {
    fn default() -> Self {
        Self {
            index: RanaIndex::Distributed,
            delays: RanaDelays::default(),
        }
    }
}

impl RanaConfig {
    pub fn validate(&self) -> Vec<String> {
        let d = &self.delays;
        let mut errors = Vec::new();
        if !(d.centralized_s > d.hybrid_s && d.hybrid_s > d.distributed_s && d.distributed_s >= 0.0)
        {
            errors.push(format!(
                "rana.delays: must satisfy centralized > hybrid > distributed >= 0 (got {}, {}, {})",
                d.centralized_s, d.hybrid_s, d.distributed_s
            ));
        }
        errors
    }
}

/// Fixed processing delay implied by the deployment index; fed to the
/// latency formula as its fixed term.
pub fn resolve_rana(config: &RanaConfig) -> f64 {
    match config.index {
        RanaIndex::Centralized => config.delays.centralized_s,
        RanaIndex::Hybrid => config.delays.hybrid_s,
        RanaIndex::Distributed => config.delays.distributed_s,
    }
}

/// Isolation level between slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RilMode {
    /// Disjoint per-slice pools; strongest isolation.
    Dedicated,
    /// Every slice may use every RB.
    Shared,
    /// Disjoint guaranteed cores plus a common overflow pool.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RilPolicy {
    pub mode: RilMode,
    /// Guaranteed RB count per slice (dedicated/hybrid cores).
    pub guaranteed: BTreeMap<SliceId, usize>,
}

impl Default for RilPolicy {
    fn default() -> Self {
        let mut guaranteed = BTreeMap::new();
        guaranteed.insert(SliceId::Goose, 8);
        guaranteed.insert(SliceId::Sv, 8);
        guaranteed.insert(SliceId::Mms, 9);
        Self {
            mode: RilMode::Dedicated,
            guaranteed,
        }
    }
}

/// Resolved RB pools: guaranteed cores, the shared overflow pool (hybrid),
/// and the admissible set each slice may schedule into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePartition {
    pub mode: RilMode,
    pub guaranteed: BTreeMap<SliceId, Vec<usize>>,
    pub overflow: Vec<usize>,
    pub admissible: BTreeMap<SliceId, Vec<usize>>,
}

impl SlicePartition {
    /// Slices whose admissible pools overlap the given slice's pool
    /// (including itself). Under dedicated mode this is just the slice;
    /// it bounds what a link is allowed to observe.
    pub fn sharing_domain(&self, slice: SliceId) -> Vec<SliceId> {
        let own = &self.admissible[&slice];
        SliceId::ALL
            .iter()
            .copied()
            .filter(|s| {
                *s == slice
                    || self.admissible[s]
                        .iter()
                        .any(|rb| own.binary_search(rb).is_ok())
            })
            .collect()
    }
}

/// Splits the RB grid according to the isolation policy. Guaranteed pools
/// are frequency-contiguous in slice-priority order.
pub fn partition_rbs(policy: &RilPolicy, num_rbs: usize) -> Result<SlicePartition, SlicingError> {
    let all: Vec<usize> = (0..num_rbs).collect();
    let mut guaranteed = BTreeMap::new();
    let mut admissible = BTreeMap::new();

    match policy.mode {
        RilMode::Shared => {
            for slice in SliceId::ALL {
                guaranteed.insert(slice, Vec::new());
                admissible.insert(slice, all.clone());
            }
            Ok(SlicePartition {
                mode: policy.mode,
                guaranteed,
                overflow: all,
                admissible,
            })
        }
        RilMode::Dedicated | RilMode::Hybrid => {
            let requested: usize = policy.guaranteed.values().sum();
            if requested > num_rbs {
                return Err(SlicingError::Config(format!(
                    "ril.guaranteed: requested {requested} RBs exceed num_rbs {num_rbs} by {}",
                    requested - num_rbs
                )));
            }
            let mut cursor = 0usize;
            // Allocate cores in priority order so the tile map is stable.
            let mut by_priority: Vec<SliceId> = SliceId::ALL.to_vec();
            by_priority.sort_by_key(|s| s.priority());
            for slice in by_priority {
                let count = policy.guaranteed.get(&slice).copied().unwrap_or(0);
                let core: Vec<usize> = (cursor..cursor + count).collect();
                cursor += count;
                guaranteed.insert(slice, core);
            }
            let overflow: Vec<usize> = (cursor..num_rbs).collect();
            for slice in SliceId::ALL {
                let mut adm = guaranteed[&slice].clone();
                if policy.mode == RilMode::Hybrid {
                    adm.extend(overflow.iter().copied());
                }
                adm.sort_unstable();
                admissible.insert(slice, adm);
            }
            Ok(SlicePartition {
                mode: policy.mode,
                guaranteed,
                overflow: if policy.mode == RilMode::Hybrid {
                    overflow
                } else {
                    Vec::new()
                },
                admissible,
            })
        }
    }
}

/// One frequency-contiguous tile per slice in the time/frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileRect {
    pub rb_start: usize,
    pub rb_count: usize,
}

/// RAN slicing function: numerology, tiling, puncturing, and the extension
/// point for customized baseband functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RsfConfig {
    /// 3GPP numerology index; slot duration = 1 ms / 2^numerology.
    pub numerology: u8,
    pub puncturing_enabled: bool,
    /// Minimum RB demand an urgent message punctures for.
    pub puncture_demand_rbs: usize,
    /// Name of a registered customized-baseband hook, if any.
    pub custom_baseband: Option<String>,
}

impl Default for RsfConfig {
    fn default() -> Self {
        Self {
            numerology: 3,
            puncturing_enabled: false,
            puncture_demand_rbs: 2,
            custom_baseband: None,
        }
    }
}

impl RsfConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.numerology > 3 {
            errors.push(format!(
                "rsf.numerology: {} outside the supported range 0..=3",
                self.numerology
            ));
        }
        if self.puncture_demand_rbs == 0 {
            errors.push("rsf.puncture_demand_rbs: must be > 0".into());
        }
        errors
    }

    pub fn slot_duration_s(&self) -> f64 {
        1.0e-3 / f64::from(1u32 << self.numerology)
    }

    /// Default tile map: one frequency-contiguous tile per slice matching
    /// the RIL guaranteed counts.
    pub fn tile_map(&self, partition: &SlicePartition) -> BTreeMap<SliceId, TileRect> {
        let mut tiles = BTreeMap::new();
        for slice in SliceId::ALL {
            let core = &partition.guaranteed[&slice];
            let (start, count) = match core.first() {
                Some(&s) => (s, core.len()),
                None => (0, 0),
            };
            tiles.insert(slice, TileRect {
                rb_start: start,
                rb_count: count,
            });
        }
        tiles
    }
}

/// Registry for customized baseband scheduling functions (the RSF extension
/// point). No hooks are registered by default.
pub struct BasebandHookRegistry {
    hooks: BTreeMap<String, fn(&mut Vec<crate::radio::LinkAllocation>)>,
}

impl BasebandHookRegistry {
    pub fn new() -> Self {
        Self {
            hooks: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, hook: fn(&mut Vec<crate::radio::LinkAllocation>)) {
        self.hooks.insert(name.to_string(), hook);
    }

    pub fn get(&self, name: &str) -> Option<&fn(&mut Vec<crate::radio::LinkAllocation>)> {
        self.hooks.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.hooks.contains_key(name)
    }
}

impl Default for BasebandHookRegistry {
    fn default() -> Self {
        Self::new()
    }
}
