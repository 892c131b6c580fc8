//! Scenario files: one TOML document with named sections, unknown keys
//! fatal, defaults filled at load, every constraint violation reported.

use super::SimError;
use crate::drl::{enumerate_blocks, TrainingConfig};
use crate::iec61850::{
    ArrivalModel, FaultEvent, FaultKind, FaultScript, SliceId, SliceProfile,
};
use crate::radio::{DeviceKind, DeviceNode, RadioConfig, Topology};
use crate::slicing::{
    partition_rbs, BasebandHookRegistry, RanaConfig, RilMode, RilPolicy, RsfConfig,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    topology: TopologySection,
    #[serde(default)]
    radio: RadioConfig,
    #[serde(default)]
    slices: SlicesSection,
    #[serde(default)]
    fault_script: FaultScriptSection,
    #[serde(default)]
    rana: RanaConfig,
    #[serde(default)]
    ril: RilSection,
    #[serde(default)]
    rsf: RsfConfig,
    #[serde(default)]
    training: TrainingConfig,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TopologySection {
    tx_power_min_dbm: Option<f64>,
    tx_power_max_dbm: Option<f64>,
    nodes: Vec<DeviceNode>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SlicesSection {
    goose: Option<SliceOverride>,
    sv: Option<SliceOverride>,
    mms: Option<SliceOverride>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SliceOverride {
    sst: Option<u8>,
    latency_sla_s: Option<f64>,
    reliability_target: Option<f64>,
    packet_bits: Option<u64>,
    priority: Option<u8>,
    arrival: Option<ArrivalModel>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FaultScriptSection {
    events: Vec<FaultEventFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultEventFile {
    time_s: f64,
    kind: FaultKind,
    source: String,
    burst: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RilSection {
    mode: RilMode,
    guaranteed: BTreeMap<String, usize>,
}

impl Default for RilSection {
    fn default() -> Self {
        Self {
            mode: RilMode::Dedicated,
            guaranteed: [("goose", 8), ("sv", 8), ("mms", 9)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RunSection {
    seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

/// Fully resolved scenario with defaults filled and a stable content hash.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub topology: Topology,
    pub radio: RadioConfig,
    pub profiles: BTreeMap<SliceId, SliceProfile>,
    pub script: FaultScript,
    pub rana: RanaConfig,
    pub ril: RilPolicy,
    pub rsf: RsfConfig,
    pub training: TrainingConfig,
    pub seed: u64,
    /// Identity of the resolved scenario (seed excluded).
    pub config_hash: String,
}

fn apply_slice_override(profile: &mut SliceProfile, over: &Option<SliceOverride>) {
    let Some(over) = over else { return };
    if let Some(v) = over.sst {
        profile.sst = v;
    }
    if let Some(v) = over.latency_sla_s {
        profile.latency_sla_s = v;
    }
    if let Some(v) = over.reliability_target {
        profile.reliability_target = v;
    }
    if let Some(v) = over.packet_bits {
        profile.packet_bits = v;
    }
    if let Some(v) = over.priority {
        profile.priority = v;
    }
    if let Some(v) = over.arrival {
        profile.arrival = v;
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses and validates a scenario document. Validation errors carry
/// section/field paths and are reported exhaustively, not first-only.
pub fn load_scenario_str(text: &str) -> Result<ScenarioConfig, SimError> {
    let file: ScenarioFile = toml::from_str(text)
        .map_err(|e| SimError::Validation(vec![format!("parse: {e}")]))?;
    let mut errors: Vec<String> = Vec::new();

    // Topology.
    let bounds_default = RadioConfig::default();
    let lo = file
        .topology
        .tx_power_min_dbm
        .unwrap_or(bounds_default.tx_power_min_dbm);
    let hi = file
        .topology
        .tx_power_max_dbm
        .unwrap_or(bounds_default.tx_power_max_dbm);
    let topology = match Topology::build(file.topology.nodes.clone(), (lo, hi)) {
        Ok(t) => Some(t),
        Err(mut errs) => {
            errors.append(&mut errs);
            None
        }
    };

    // Radio.
    let mut radio = file.radio.clone();
    radio.tx_power_min_dbm = lo;
    radio.tx_power_max_dbm = hi;
    errors.extend(radio.validate());

    // Slice profiles.
    let mut profiles = BTreeMap::new();
    let mut goose = SliceProfile::goose_default();
    apply_slice_override(&mut goose, &file.slices.goose);
    let mut sv = SliceProfile::sv_default();
    apply_slice_override(&mut sv, &file.slices.sv);
    let mut mms = SliceProfile::mms_default();
    apply_slice_override(&mut mms, &file.slices.mms);
    for p in [&goose, &sv, &mms] {
        errors.extend(p.validate());
    }
    if goose.sst != 2 || sv.sst != 2 {
        errors.push("slices: GOOSE and SV must map to SST 2 (uRLLC)".into());
    }
    if mms.sst != 3 {
        errors.push("slices.mms: must map to SST 3 (mMTC)".into());
    }
    if !(goose.priority < sv.priority && sv.priority < mms.priority) {
        errors.push("slices: priorities must order GOOSE < SV < MMS".into());
    }
    profiles.insert(SliceId::Goose, goose);
    profiles.insert(SliceId::Sv, sv);
    profiles.insert(SliceId::Mms, mms);

    // Fault script, resolving device names.
    let mut events = Vec::new();
    for (i, e) in file.fault_script.events.iter().enumerate() {
        let source = match topology.as_ref().and_then(|t| t.device_index(&e.source)) {
            Some(idx) => {
                if topology.as_ref().unwrap().nodes[idx].kind == DeviceKind::GNodeB {
                    errors.push(format!(
                        "fault_script.events[{i}].source: '{}' is a gNodeB, not an endpoint",
                        e.source
                    ));
                }
                idx
            }
            None => {
                if topology.is_some() {
                    errors.push(format!(
                        "fault_script.events[{i}].source: unknown device '{}'",
                        e.source
                    ));
                }
                usize::MAX
            }
        };
        events.push(FaultEvent {
            time_s: e.time_s,
            kind: e.kind,
            source,
            burst: e.burst,
        });
    }
    let script = FaultScript { events };
    if let Err(e) = script.validate() {
        errors.push(format!("fault_script: {e}"));
    }
    let horizon =
        file.training.slots_per_episode as f64 * file.rsf.slot_duration_s();
    for (i, e) in script.events.iter().enumerate() {
        if e.time_s < 0.0 || e.time_s >= horizon {
            errors.push(format!(
                "fault_script.events[{i}].time_s: {} outside the episode horizon [0, {horizon})",
                e.time_s
            ));
        }
    }

    // Control elements.
    errors.extend(file.rana.validate());
    errors.extend(file.rsf.validate());
    errors.extend(file.training.validate());

    let mut guaranteed = BTreeMap::new();
    for (name, count) in &file.ril.guaranteed {
        match SliceId::from_name(name) {
            Some(slice) => {
                guaranteed.insert(slice, *count);
            }
            None => errors.push(format!("ril.guaranteed: unknown slice '{name}'")),
        }
    }
    let ril = RilPolicy {
        mode: file.ril.mode,
        guaranteed,
    };
    match partition_rbs(&ril, radio.num_rbs) {
        Ok(partition) => {
            for slice in SliceId::ALL {
                let admissible = &partition.admissible[&slice];
                if enumerate_blocks(admissible, &file.training.block_sizes).is_empty() {
                    errors.push(format!(
                        "ril/training: slice {slice} has no admissible RB block of the configured sizes"
                    ));
                }
            }
        }
        Err(e) => errors.push(e.to_string()),
    }

    if let Some(hook) = &file.rsf.custom_baseband {
        let registry = BasebandHookRegistry::default();
        if !registry.contains(hook) {
            errors.push(format!(
                "rsf.custom_baseband: hook '{hook}' is not registered"
            ));
        }
    }

    if !errors.is_empty() {
        return Err(SimError::Validation(errors));
    }

    let topology = topology.expect("errors would have been reported");
    let hashable = (
        &topology, &radio, &profiles, &script, &file.rana, &ril, &file.rsf, &file.training,
    );
    let canonical = serde_json::to_string(&hashable)
        .map_err(|e| SimError::Runtime(format!("hash serialization: {e}")))?;
    Ok(ScenarioConfig {
        topology,
        radio,
        profiles,
        script,
        rana: file.rana,
        ril,
        rsf: file.rsf,
        training: file.training,
        seed: file.run.seed,
        config_hash: sha256_hex(canonical.as_bytes()),
    })
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    load_scenario_str(&text)
}

/// Experiment setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetupTag {
    Beyond5gPlus,
    Default5g,
    BaselineRr,
    BaselineGreedy,
}

impl SetupTag {
    pub const ALL: [SetupTag; 4] = [
        SetupTag::Beyond5gPlus,
        SetupTag::Default5g,
        SetupTag::BaselineRr,
        SetupTag::BaselineGreedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SetupTag::Beyond5gPlus => "beyond5g_plus",
            SetupTag::Default5g => "default_5g",
            SetupTag::BaselineRr => "baseline_rr",
            SetupTag::BaselineGreedy => "baseline_greedy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }
}

impl std::fmt::Display for SetupTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolves the setup overlay. Exactly four field groups differ between the
/// learning setups: the RANA index, the RIL mode/pools, puncturing, and the
/// deadline state features. The baselines reuse the beyond-5G radio-control
/// configuration without puncturing; their scheduling rule replaces
/// learning.
pub fn apply_setup(base: &ScenarioConfig, setup: SetupTag) -> ScenarioConfig {
    let mut cfg = base.clone();
    let hybrid_pools = |guaranteed: &BTreeMap<SliceId, usize>| {
        guaranteed
            .iter()
            .map(|(&slice, &count)| (slice, count / 2))
            .collect::<BTreeMap<_, _>>()
    };
    match setup {
        SetupTag::Beyond5gPlus => {
            cfg.rana.index = crate::slicing::RanaIndex::Distributed;
            cfg.ril = RilPolicy {
                mode: RilMode::Hybrid,
                guaranteed: hybrid_pools(&base.ril.guaranteed),
            };
            cfg.rsf.puncturing_enabled = true;
            cfg.training.deadline_features = true;
        }
        SetupTag::Default5g => {
            cfg.rana.index = crate::slicing::RanaIndex::Centralized;
            cfg.ril = RilPolicy {
                mode: RilMode::Dedicated,
                guaranteed: base.ril.guaranteed.clone(),
            };
            cfg.rsf.puncturing_enabled = false;
            cfg.training.deadline_features = false;
        }
        SetupTag::BaselineRr | SetupTag::BaselineGreedy => {
            cfg.rana.index = crate::slicing::RanaIndex::Distributed;
            cfg.ril = RilPolicy {
                mode: RilMode::Hybrid,
                guaranteed: hybrid_pools(&base.ril.guaranteed),
            };
            cfg.rsf.puncturing_enabled = false;
            cfg.training.deadline_features = true;
        }
    }
    cfg
}

/// One resolved-field difference between two setups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDelta {
    pub path: String,
    pub a: String,
    pub b: String,
}

/// Proves the configuration delta between two setups of the same scenario
/// by diffing the resolved configs field by field.
pub fn diff_setups(base: &ScenarioConfig, a: SetupTag, b: SetupTag) -> Vec<FieldDelta> {
    let va = serde_json::to_value(apply_setup(base, a)).expect("config serializes");
    let vb = serde_json::to_value(apply_setup(base, b)).expect("config serializes");
    let mut deltas = Vec::new();
    diff_values("", &va, &vb, &mut deltas);
    deltas.retain(|d| d.path != "config_hash");
    deltas
}

fn diff_values(path: &str, a: &serde_json::Value, b: &serde_json::Value, out: &mut Vec<FieldDelta>) {
    use serde_json::Value;
    match (a, b) {
        (Value::Object(ma), Value::Object(mb)) => {
            let keys: std::collections::BTreeSet<&String> =
                ma.keys().chain(mb.keys()).collect();
            for key in keys {
                let sub = if path.is_empty() {
                    key.clone()
                } else {
                    format!("{path}.{key}")
                };
                diff_values(
                    &sub,
                    ma.get(key).unwrap_or(&Value::Null),
                    mb.get(key).unwrap_or(&Value::Null),
                    out,
                );
            }
        }
        _ if a != b => out.push(FieldDelta {
            path: path.to_string(),
            a: a.to_string(),
            b: b.to_string(),
        }),
        _ => {}
    }
}
