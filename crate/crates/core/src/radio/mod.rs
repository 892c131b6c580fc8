//! Physical-layer abstraction: topology, path loss, shadowed channel gains,
//! co-channel interference SINR, spectral efficiency, throughput, and
//! per-message transmission latency, advanced in discrete scheduling slots.

mod env;
mod propagation;
mod sinr;

pub use env::{
    EnvConfig, EnvState, LinkSlotStats, MessageOutcome, StepOutcome, StepRecord,
};
pub use propagation::{path_loss_db, realize_channel, ChannelMatrix};
pub use sinr::{
    dbm_to_watts, link_throughput, noise_watts_per_rb, sinr_per_rb, spectral_efficiency,
    transmission_latency, watts_to_dbm,
};

use crate::iec61850::SliceId;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RadioError {
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("invalid radio parameter: {0}")]
    Config(String),
    #[error("policy violation for slice {slice}: {detail}")]
    PolicyViolation { slice: SliceId, detail: String },
    #[error("invalid allocation: {0}")]
    Allocation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Ied,
    Ssc,
    Mu,
    #[serde(rename = "gnodeb")]
    GNodeB,
}

impl std::fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DeviceKind::Ied => "ied",
            DeviceKind::Ssc => "ssc",
            DeviceKind::Mu => "mu",
            DeviceKind::GNodeB => "gnodeb",
        };
        f.write_str(s)
    }
}

/// A smart-grid endpoint (IED/SSC/MU) or a gNodeB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceNode {
    pub name: String,
    pub kind: DeviceKind,
    /// Meters.
    pub position: [f64; 2],
    /// gNodeB name; resolved to an index at topology build. Empty for gNodeBs.
    #[serde(default)]
    pub serving_cell: Option<String>,
    #[serde(default = "default_max_tx_power")]
    pub max_tx_power_dbm: f64,
}

fn default_max_tx_power() -> f64 {
    23.0
}

/// Validated node set with resolved serving-cell indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<DeviceNode>,
    /// Indices into `nodes` of the gNodeBs, in declaration order.
    pub cells: Vec<usize>,
    /// For every node: position of its serving cell in `cells`
    /// (usize::MAX for gNodeBs themselves).
    pub serving: Vec<usize>,
    pub tx_power_min_dbm: f64,
    pub tx_power_max_dbm: f64,
}

impl Topology {
    /// Builds and validates; collects every violation instead of stopping at
    /// the first one.
    pub fn build(
        nodes: Vec<DeviceNode>,
        tx_power_bounds: (f64, f64),
    ) -> Result<Topology, Vec<String>> {
        let mut errors = Vec::new();
        let cells: Vec<usize> = nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == DeviceKind::GNodeB)
            .map(|(i, _)| i)
            .collect();
        if cells.is_empty() {
            errors.push("topology: no gNodeB defined".to_string());
        }
        let mut seen = std::collections::BTreeSet::new();
        for node in &nodes {
            if !seen.insert(node.name.clone()) {
                errors.push(format!("topology.{}: duplicate device name", node.name));
            }
        }
        let (lo, hi) = tx_power_bounds;
        let mut serving = Vec::with_capacity(nodes.len());
        for node in &nodes {
            if !node.position.iter().all(|p| p.is_finite()) {
                errors.push(format!("topology.{}: non-finite position", node.name));
            }
            if node.kind == DeviceKind::GNodeB {
                if node.serving_cell.is_some() {
                    errors.push(format!(
                        "topology.{}: a gNodeB cannot have a serving cell",
                        node.name
                    ));
                }
                serving.push(usize::MAX);
                continue;
            }
            if !(lo..=hi).contains(&node.max_tx_power_dbm) {
                errors.push(format!(
                    "topology.{}: max_tx_power {} dBm outside [{lo}, {hi}]",
                    node.name, node.max_tx_power_dbm
                ));
            }
            match &node.serving_cell {
                None => {
                    errors.push(format!(
                        "topology.{}: non-gNodeB node needs exactly one serving cell",
                        node.name
                    ));
                    serving.push(usize::MAX);
                }
                Some(cell_name) => {
                    match nodes
                        .iter()
                        .position(|n| &n.name == cell_name && n.kind == DeviceKind::GNodeB)
                    {
                        Some(node_idx) =>

                            serving.push(cells.iter().position(|&c| c == node_idx).unwrap()),
                        None => {
                            errors.push(format!(
                                "topology.{}: serving cell '{cell_name}' is not a gNodeB in this topology",
                                node.name
                            ));
                            serving.push(usize::MAX);
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(Topology {
                nodes,
                cells,
                serving,
                tx_power_min_dbm: lo,
                tx_power_max_dbm: hi,
            })
        } else {
            Err(errors)
        }
    }

    pub fn device_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn device_name(&self, index: usize) -> &str {
        &self.nodes[index].name
    }

    /// Indices of all non-gNodeB devices.
    pub fn endpoints(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].kind != DeviceKind::GNodeB)
            .collect()
    }

    /// Serving-cell slot (index into `cells`) for an endpoint.
    pub fn serving_cell_of(&self, device: usize) -> usize {
        self.serving[device]
    }

    pub fn distance_m(&self, a: usize, b: usize) -> f64 {
        let pa = self.nodes[a].position;
        let pb = self.nodes[b].position;
        ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt()
    }
}

/// Carrier model and RB-grid parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub num_rbs: usize,
    pub rb_bandwidth_hz: f64,
    pub noise_spectral_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    /// PL(d) = A + B*log10(d_km)
    pub pathloss_a_db: f64,
    pub pathloss_b_db: f64,
    pub shadowing_sigma_db: f64,
    /// Shadowing is re-drawn every this many slots.
    pub coherence_slots: u64,
    pub se_cap_bps_hz: f64,
    pub tx_power_min_dbm: f64,
    pub tx_power_max_dbm: f64,
    /// Optional static per-RB receive offset in dB (diagnostic scenarios);
    /// length must equal num_rbs when present.
    pub rb_gain_offsets_db: Option<Vec<f64>>,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            num_rbs: 25,
            rb_bandwidth_hz: 180e3,
            noise_spectral_density_dbm_hz: -174.0,
            noise_figure_db: 7.0,
            pathloss_a_db: 128.1,
            pathloss_b_db: 37.6,
            shadowing_sigma_db: 8.0,
            coherence_slots: 10,
            se_cap_bps_hz: 9.6,
            tx_power_min_dbm: -10.0,
            tx_power_max_dbm: 30.0,
            rb_gain_offsets_db: None,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.num_rbs == 0 {
            errors.push("radio.num_rbs: must be > 0".into());
        }
        if !(self.rb_bandwidth_hz > 0.0) {
            errors.push("radio.rb_bandwidth_hz: must be > 0".into());
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            errors.push("radio.shadowing_sigma_db: must be >= 0".into());
        }
        if self.coherence_slots == 0 {
            errors.push("radio.coherence_slots: must be > 0".into());
        }
        if !(self.se_cap_bps_hz > 0.0) {
            errors.push("radio.se_cap_bps_hz: must be > 0".into());
        }
        if self.tx_power_min_dbm >= self.tx_power_max_dbm {
            errors.push("radio.tx_power bounds: min must be < max".into());
        }
        if let Some(offsets) = &self.rb_gain_offsets_db {
            if offsets.len() != self.num_rbs {
                errors.push(format!(
                    "radio.rb_gain_offsets_db: has {} entries, num_rbs is {}",
                    offsets.len(),
                    self.num_rbs
                ));
            }
        }
        errors
    }

    #[inline]
    pub fn rb_offset_linear(&self, rb: usize) -> f64 {
        match &self.rb_gain_offsets_db {
            Some(offsets) => 10f64.powf(offsets[rb] / 10.0),
            None => 1.0,
        }
    }
}

/// Per-link grant for one slot: the RB set and transmit power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAllocation {
    pub device: usize,
    pub slice: SliceId,
    /// Sorted, deduplicated RB indices.
    pub rbs: Vec<usize>,
    pub tx_power_dbm: f64,
}

impl LinkAllocation {
    pub fn new(device: usize, slice: SliceId, mut rbs: Vec<usize>, tx_power_dbm: f64) -> Self {
        rbs.sort_unstable();
        rbs.dedup();
        Self {
            device,
            slice,
            rbs,
            tx_power_dbm,
        }
    }
}
