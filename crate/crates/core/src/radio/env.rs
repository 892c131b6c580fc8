//! Discrete-slot environment: message queues, grant validation, SINR and
//! throughput evaluation, sub-slot latency accounting, channel coherence.

use super::{
    link_throughput, noise_watts_per_rb, realize_channel, sinr_per_rb, spectral_efficiency,
    ChannelMatrix, LinkAllocation, RadioConfig, RadioError, Topology,
};
use crate::iec61850::{Message, SliceId, SliceProfile};
use crate::radio::dbm_to_watts;
use crate::slicing::rsm_check;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Environment-facing configuration assembled by the harness from the
/// radio, RANA/RIL/RSF and slice sections.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub radio: RadioConfig,
    pub slot_duration_s: f64,
    /// RANA processing offset added to every completed message's latency.
    pub fixed_delay_s: f64,
    /// Messages unserved past this multiple of their SLA are dropped.
    pub drop_sla_multiple: f64,
    /// Admissible RB set per slice (sorted), from the RIL partition.
    pub admissible: BTreeMap<SliceId, Vec<usize>>,
    pub profiles: BTreeMap<SliceId, SliceProfile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageOutcome {
    Completed,
    DroppedExpired,
    DroppedHorizon,
}

/// One terminal event per injected message (completed or dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub slot: u64,
    pub episode: u64,
    pub device: String,
    pub slice: SliceId,
    pub message_id: u64,
    /// Mean linear SINR over the grant at the completing slot, in dB.
    pub sinr_db: Option<f64>,
    pub throughput_bps: f64,
    pub queueing_s: f64,
    /// First-bit to last-bit time, including any mid-service stalls.
    pub serialization_s: f64,
    /// Total = queueing + serialization + fixed delay; absent for drops.
    pub latency_s: Option<f64>,
    pub violated: bool,
    pub outcome: MessageOutcome,
}

/// Per-link radio figures for one slot, consumed by the reward and the
/// state encoder.
#[derive(Debug, Clone)]
pub struct LinkSlotStats {
    pub device: usize,
    pub slice: SliceId,
    pub rbs: Vec<usize>,
    pub tx_power_dbm: f64,
    pub mean_sinr_db: f64,
    /// Sum of per-RB spectral efficiencies (the link's achieved SE).
    pub se_sum: f64,
    pub throughput_bps: f64,
    pub served_bits: f64,
    /// (victim device, victim slice, caused interference W over shared RBs,
    /// noise W over those RBs)
    pub caused: Vec<(usize, SliceId, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub records: Vec<StepRecord>,
    pub link_stats: Vec<LinkSlotStats>,
}

#[derive(Debug, Clone)]
struct QueuedMessage {
    message: Message,
    remaining_bits: f64,
    first_service: Option<f64>,
}

/// Value-style environment state advanced by [`EnvState::step`].
#[derive(Debug, Clone)]
pub struct EnvState {
    pub slot: u64,
    pub episode: u64,
    pub episode_slot: u64,
    /// Episode-local wall time at the start of the current slot.
    pub time_s: f64,
    pub channel: ChannelMatrix,
    seed: u64,
    queues: BTreeMap<(usize, SliceId), VecDeque<QueuedMessage>>,
    /// cells x rbs: total received co-channel power (W) measured last slot.
    last_interference_w: Vec<Vec<f64>>,
    /// Own received-power contribution per link at its serving cell last
    /// slot, per RB.
    last_own_w: BTreeMap<(usize, SliceId), Vec<(usize, f64)>>,
}

impl EnvState {
    pub fn new(topo: &Topology, cfg: &EnvConfig, seed: u64, episode: u64, start_slot: u64) -> Self {
        let epoch = start_slot / cfg.radio.coherence_slots;
        let channel = realize_channel(topo, &cfg.radio, seed, epoch);
        EnvState {
            slot: start_slot,
            episode,
            episode_slot: 0,
            time_s: 0.0,
            channel,
            seed,
            queues: BTreeMap::new(),
            last_interference_w: vec![vec![0.0; cfg.radio.num_rbs]; topo.cells.len()],
            last_own_w: BTreeMap::new(),
        }
    }

    /// Enqueues messages; callers inject in nondecreasing created_at order
    /// per (device, slice), which preserves FIFO service.
    pub fn inject(&mut self, messages: Vec<Message>) {
        for message in messages {
            let key = (message.source, message.slice);
            self.queues.entry(key).or_default().push_back(QueuedMessage {
                remaining_bits: message.bits as f64,
                first_service: None,
                message,
            });
        }
    }

    /// Links with pending traffic, in deterministic (device, slice) order.
    pub fn active_links(&self) -> Vec<(usize, SliceId)> {
        self.queues
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&k, _)| k)
            .collect()
    }

    pub fn backlog_bits(&self, device: usize, slice: SliceId) -> f64 {
        self.queues
            .get(&(device, slice))
            .map(|q| q.iter().map(|m| m.remaining_bits).sum())
            .unwrap_or(0.0)
    }

    pub fn head_of_line(&self, device: usize, slice: SliceId) -> Option<&Message> {
        self.queues
            .get(&(device, slice))
            .and_then(|q| q.front())
            .map(|m| &m.message)
    }

    pub fn last_interference_w(&self, cell: usize, rb: usize) -> f64 {
        self.last_interference_w[cell][rb]
    }

    pub fn last_own_w(&self, device: usize, slice: SliceId, rb: usize) -> f64 {
        self.last_own_w
            .get(&(device, slice))
            .map(|v| {
                v.iter()
                    .find(|(r, _)| *r == rb)
                    .map(|(_, w)| *w)
                    .unwrap_or(0.0)
            })
            .unwrap_or(0.0)
    }

    /// Drops messages older than the configured multiple of their SLA.
    /// Runs at slot start, before grants are decided.
    pub fn drop_expired(&mut self, topo: &Topology, cfg: &EnvConfig) -> Vec<StepRecord> {
        let now = self.time_s;
        let mut records = Vec::new();
        for (&(device, slice), queue) in self.queues.iter_mut() {
            let sla = cfg.profiles[&slice].latency_sla_s;
            let horizon = cfg.drop_sla_multiple * sla;
            while let Some(front) = queue.front() {
                let age = now - front.message.created_at;
                if age > horizon {
                    let m = queue.pop_front().unwrap();
                    records.push(StepRecord {
                        slot: self.slot,
                        episode: self.episode,
                        device: topo.device_name(device).to_string(),
                        slice,
                        message_id: m.message.id,
                        sinr_db: None,
                        throughput_bps: 0.0,
                        queueing_s: age,
                        serialization_s: 0.0,
                        latency_s: None,
                        violated: true,
                        outcome: MessageOutcome::DroppedExpired,
                    });
                } else {
                    break;
                }
            }
        }
        records
    }

    /// Flushes every still-queued message as dropped-at-horizon; called once
    /// at the end of a run so each injected message appears exactly once in
    /// the log.
    pub fn drain_remaining(&mut self, topo: &Topology) -> Vec<StepRecord> {
        let mut records = Vec::new();
        for ((device, slice), queue) in std::mem::take(&mut self.queues) {
            for m in queue {
                records.push(StepRecord {
                    slot: self.slot,
                    episode: self.episode,
                    device: topo.device_name(device).to_string(),
                    slice,
                    message_id: m.message.id,
                    sinr_db: None,
                    throughput_bps: 0.0,
                    queueing_s: self.time_s - m.message.created_at,
                    serialization_s: 0.0,
                    latency_s: None,
                    violated: true,
                    outcome: MessageOutcome::DroppedHorizon,
                });
            }
        }
        records
    }

    fn validate_allocations(
        &self,
        allocations: &[LinkAllocation],
        topo: &Topology,
        cfg: &EnvConfig,
    ) -> Result<(), RadioError> {
        let mut seen = std::collections::BTreeSet::new();
        for alloc in allocations {
            if !seen.insert((alloc.device, alloc.slice)) {
                return Err(RadioError::Allocation(format!(
                    "duplicate allocation for ({}, {})",
                    topo.device_name(alloc.device),
                    alloc.slice
                )));
            }
            let admissible = cfg.admissible.get(&alloc.slice).ok_or_else(|| {
                RadioError::PolicyViolation {
                    slice: alloc.slice,
                    detail: "slice has no admissible RB pool".into(),
                }
            })?;
            for &rb in &alloc.rbs {
                if rb >= cfg.radio.num_rbs {
                    return Err(RadioError::Allocation(format!(
                        "RB {rb} outside the grid of {} RBs",
                        cfg.radio.num_rbs
                    )));
                }
                if admissible.binary_search(&rb).is_err() {
                    return Err(RadioError::PolicyViolation {
                        slice: alloc.slice,
                        detail: format!(
                            "RB {rb} is outside the slice's admissible pool"
                        ),
                    });
                }
            }
            let device = &topo.nodes[alloc.device];
            let lo = cfg.radio.tx_power_min_dbm - 1e-9;
            let hi = device.max_tx_power_dbm + 1e-9;
            if !alloc.rbs.is_empty() && !(lo..=hi).contains(&alloc.tx_power_dbm) {
                return Err(RadioError::Allocation(format!(
                    "tx power {} dBm outside [{}, {}] for {}",
                    alloc.tx_power_dbm,
                    cfg.radio.tx_power_min_dbm,
                    device.max_tx_power_dbm,
                    device.name
                )));
            }
        }
        Ok(())
    }

    /// Advances one slot under the given joint allocation: computes SINR,
    /// spectral efficiency and throughput per link, drains queues with
    /// sub-slot completion times, records terminal message events, then
    /// steps the clock and re-realizes the channel on coherence boundaries.
    pub fn step(
        &mut self,
        allocations: &[LinkAllocation],
        topo: &Topology,
        cfg: &EnvConfig,
    ) -> Result<StepOutcome, RadioError> {
        self.validate_allocations(allocations, topo, cfg)?;

        let noise_rb = noise_watts_per_rb(&cfg.radio);
        let slot_start = self.time_s;
        let slot_end = slot_start + cfg.slot_duration_s;
        let mut records = Vec::new();
        let mut link_stats = Vec::with_capacity(allocations.len());

        for (idx, alloc) in allocations.iter().enumerate() {
            let sinrs = sinr_per_rb(idx, allocations, topo, &self.channel, &cfg.radio)?;
            let mut se = Vec::with_capacity(sinrs.len());
            for &(_, s) in &sinrs {
                se.push(spectral_efficiency(s, cfg.radio.se_cap_bps_hz)?);
            }
            let se_sum: f64 = se.iter().sum();
            let throughput = link_throughput(&se, cfg.radio.rb_bandwidth_hz);
            let mean_linear = if sinrs.is_empty() {
                0.0
            } else {
                sinrs.iter().map(|(_, s)| s).sum::<f64>() / sinrs.len() as f64
            };
            let mean_sinr_db = if mean_linear > 0.0 {
                10.0 * mean_linear.log10()
            } else {
                f64::NEG_INFINITY
            };

            // Interference caused to co-channel victims.
            let own_power = dbm_to_watts(alloc.tx_power_dbm);
            let mut caused = Vec::new();
            for (j, other) in allocations.iter().enumerate() {
                if j == idx {
                    continue;
                }
                let shared: Vec<usize> = alloc
                    .rbs
                    .iter()
                    .copied()
                    .filter(|rb| other.rbs.binary_search(rb).is_ok())
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                let victim_cell = topo.serving_cell_of(other.device);
                let mut caused_w = 0.0;
                for &rb in &shared {
                    caused_w += own_power
                        * self.channel.gain(alloc.device, victim_cell)
                        * cfg.radio.rb_offset_linear(rb);
                }
                caused.push((
                    other.device,
                    other.slice,
                    caused_w,
                    noise_rb * shared.len() as f64,
                ));
            }

            // Drain the link's queue at this slot's throughput.
            let mut served_bits = 0.0;
            if let Some(queue) = self.queues.get_mut(&(alloc.device, alloc.slice)) {
                let mut cursor = slot_start;
                while throughput > 0.0 {
                    let Some(head) = queue.front_mut() else { break };
                    let start = cursor.max(head.message.created_at);
                    if start >= slot_end {
                        break;
                    }
                    if head.first_service.is_none() {
                        head.first_service = Some(start);
                    }
                    let available_s = slot_end - start;
                    let need_s = head.remaining_bits / throughput;
                    if need_s <= available_s {
                        let finish = start + need_s;
                        served_bits += head.remaining_bits;
                        let first = head.first_service.unwrap();
                        let queueing = first - head.message.created_at;
                        let serialization = finish - first;
                        let latency = queueing + serialization + cfg.fixed_delay_s;
                        let profile = &cfg.profiles[&alloc.slice];
                        records.push(StepRecord {
                            slot: self.slot,
                            episode: self.episode,
                            device: topo.device_name(alloc.device).to_string(),
                            slice: alloc.slice,
                            message_id: head.message.id,
                            sinr_db: Some(mean_sinr_db),
                            throughput_bps: throughput,
                            queueing_s: queueing,
                            serialization_s: serialization,
                            latency_s: Some(latency),
                            violated: rsm_check(latency, profile),
                            outcome: MessageOutcome::Completed,
                        });
                        queue.pop_front();
                        cursor = finish;
                    } else {
                        let served = available_s * throughput;
                        head.remaining_bits -= served;
                        served_bits += served;
                        break;
                    }
                }
            }

            link_stats.push(LinkSlotStats {
                device: alloc.device,
                slice: alloc.slice,
                rbs: alloc.rbs.clone(),
                tx_power_dbm: alloc.tx_power_dbm,
                mean_sinr_db,
                se_sum,
                throughput_bps: throughput,
                served_bits,
                caused,
            });
        }

        // Refresh last-slot interference measurements (total received
        // co-channel power per cell per RB, and each link's own share).
        for row in &mut self.last_interference_w {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        self.last_own_w.clear();
        for alloc in allocations {
            let p = dbm_to_watts(alloc.tx_power_dbm);
            let mut own = Vec::with_capacity(alloc.rbs.len());
            let own_cell = topo.serving_cell_of(alloc.device);
            for &rb in &alloc.rbs {
                let offset = cfg.radio.rb_offset_linear(rb);
                for (cell_slot, _) in topo.cells.iter().enumerate() {
                    self.last_interference_w[cell_slot][rb] +=
                        p * self.channel.gain(alloc.device, cell_slot) * offset;
                }
                own.push((rb, p * self.channel.gain(alloc.device, own_cell) * offset));
            }
            self.last_own_w.insert((alloc.device, alloc.slice), own);
        }

        self.slot += 1;
        self.episode_slot += 1;
        self.time_s = self.episode_slot as f64 * cfg.slot_duration_s;
        if self.slot % cfg.radio.coherence_slots == 0 {
            let epoch = self.slot / cfg.radio.coherence_slots;
            self.channel = realize_channel(topo, &cfg.radio, self.seed, epoch);
        }

        Ok(StepOutcome {
            records,
            link_stats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{DeviceKind, DeviceNode};

    fn topo() -> Topology {
        let nodes = vec![
            DeviceNode {
                name: "g1".into(),
                kind: DeviceKind::GNodeB,
                position: [0.0, 0.0],
                serving_cell: None,
                max_tx_power_dbm: 30.0,
            },
            DeviceNode {
                name: "a".into(),
                kind: DeviceKind::Ied,
                position: [100.0, 0.0],
                serving_cell: Some("g1".into()),
                max_tx_power_dbm: 23.0,
            },
            DeviceNode {
                name: "b".into(),
                kind: DeviceKind::Mu,
                position: [0.0, 120.0],
                serving_cell: Some("g1".into()),
                max_tx_power_dbm: 23.0,
            },
        ];
        Topology::build(nodes, (-10.0, 30.0)).unwrap()
    }

    fn env_cfg() -> EnvConfig {
        let mut admissible = BTreeMap::new();
        admissible.insert(SliceId::Goose, (0..8).collect());
        admissible.insert(SliceId::Sv, (8..16).collect());
        admissible.insert(SliceId::Mms, (16..25).collect());
        let mut profiles = BTreeMap::new();
        profiles.insert(SliceId::Goose, SliceProfile::goose_default());
        profiles.insert(SliceId::Sv, SliceProfile::sv_default());
        profiles.insert(SliceId::Mms, SliceProfile::mms_default());
        EnvConfig {
            radio: RadioConfig {
                shadowing_sigma_db: 0.0,
                ..RadioConfig::default()
            },
            slot_duration_s: 0.125e-3,
            fixed_delay_s: 0.05e-3,
            drop_sla_multiple: 100.0,
            admissible,
            profiles,
        }
    }

    #[test]
    fn idle_step_advances_only() {
        let topo = topo();
        let cfg = env_cfg();
        let mut env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let out = env.step(&[], &topo, &cfg).unwrap();
        assert!(out.records.is_empty());
        assert!(out.link_stats.is_empty());
        assert_eq!(env.slot, 1);
        assert!((env.time_s - 0.125e-3).abs() < 1e-18);
    }

    /// Repeats the same grant until the link's queue drains; returns the
    /// completion records.
    fn run_to_completion(
        env: &mut EnvState,
        alloc: Vec<LinkAllocation>,
        topo: &Topology,
        cfg: &EnvConfig,
        max_slots: usize,
    ) -> Vec<StepRecord> {
        let mut records = Vec::new();
        for _ in 0..max_slots {
            let out = env.step(&alloc, topo, cfg).unwrap();
            records.extend(out.records);
            if env.active_links().is_empty() {
                break;
            }
        }
        records
    }

    #[test]
    fn goose_on_dedicated_rb_meets_sla() {
        let topo = topo();
        let cfg = env_cfg();
        let mut env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let goose = SliceProfile::goose_default();
        env.inject(vec![Message::new(0, &goose, 1, 0.0)]);
        let alloc = vec![LinkAllocation::new(1, SliceId::Goose, vec![0, 1, 2, 3], 23.0)];
        let records = run_to_completion(&mut env, alloc, &topo, &cfg, 10);
        assert_eq!(records.len(), 1);
        let rec = &records[0];
        assert_eq!(rec.outcome, MessageOutcome::Completed);
        let lat = rec.latency_s.unwrap();
        // Oracle: chain the formulas by hand. Interference-free, zero
        // queueing, constant throughput across the spanned slots.
        let expected = 1096.0 / rec.throughput_bps + cfg.fixed_delay_s;
        assert!((lat - expected).abs() < 1e-12, "lat {lat} vs oracle {expected}");
        assert!(lat < 0.3e-3, "high-SINR 4-RB GOOSE grant should meet SLA, got {lat}");
        assert!(!rec.violated);
        assert!((rec.queueing_s - 0.0).abs() < 1e-15);
    }

    #[test]
    fn forced_sharing_is_worse_than_interference_free() {
        let topo = topo();
        let cfg = env_cfg();
        // Run 1: both devices alone on the same RB in separate steps.
        let sv = SliceProfile::sv_default();
        let mk_msg = |id, src| Message::new(id, &sv, src, 0.0);

        let mut env_free = EnvState::new(&topo, &cfg, 1, 0, 0);
        env_free.inject(vec![mk_msg(0, 1)]);
        let recs_a = run_to_completion(
            &mut env_free,
            vec![LinkAllocation::new(1, SliceId::Sv, vec![8], 23.0)],
            &topo,
            &cfg,
            200,
        );
        let lat_a_free = recs_a[0].latency_s.unwrap();

        let mut env_free_b = EnvState::new(&topo, &cfg, 1, 0, 0);
        env_free_b.inject(vec![mk_msg(0, 2)]);
        let recs_b = run_to_completion(
            &mut env_free_b,
            vec![LinkAllocation::new(2, SliceId::Sv, vec![8], 23.0)],
            &topo,
            &cfg,
            200,
        );
        let lat_b_free = recs_b[0].latency_s.unwrap();

        // Run 2: both forced onto the same RB at max power simultaneously.
        let mut env_shared = EnvState::new(&topo, &cfg, 1, 0, 0);
        env_shared.inject(vec![mk_msg(0, 1), mk_msg(1, 2)]);
        let records = run_to_completion(
            &mut env_shared,
            vec![
                LinkAllocation::new(1, SliceId::Sv, vec![8], 23.0),
                LinkAllocation::new(2, SliceId::Sv, vec![8], 23.0),
            ],
            &topo,
            &cfg,
            400,
        );
        assert_eq!(records.len(), 2);
        for rec in &records {
            let free = if rec.device == "a" { lat_a_free } else { lat_b_free };
            let shared = rec.latency_s.unwrap();
            assert!(
                shared > free,
                "co-channel latency {shared} must exceed interference-free {free}"
            );
        }
    }

    #[test]
    fn pool_violation_names_the_slice() {
        let topo = topo();
        let cfg = env_cfg();
        let mut env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let err = env
            .step(
                &[LinkAllocation::new(1, SliceId::Goose, vec![20], 23.0)],
                &topo,
                &cfg,
            )
            .unwrap_err();
        match err {
            RadioError::PolicyViolation { slice, .. } => assert_eq!(slice, SliceId::Goose),
            other => panic!("expected policy violation, got {other}"),
        }
    }

    #[test]
    fn starved_message_eventually_drops() {
        let topo = topo();
        let cfg = env_cfg();
        let mut env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let goose = SliceProfile::goose_default();
        env.inject(vec![Message::new(7, &goose, 1, 0.0)]);
        // GOOSE horizon = 100 * 0.3 ms = 30 ms = 240 slots.
        let mut dropped = Vec::new();
        for _ in 0..242 {
            dropped.extend(env.drop_expired(&topo, &cfg));
            env.step(&[], &topo, &cfg).unwrap();
        }
        assert_eq!(dropped.len(), 1);
        assert_eq!(dropped[0].outcome, MessageOutcome::DroppedExpired);
        assert!(dropped[0].violated);
        assert_eq!(dropped[0].message_id, 7);
    }

    #[test]
    fn drain_remaining_flushes_every_queue() {
        let topo = topo();
        let cfg = env_cfg();
        let mut env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let sv = SliceProfile::sv_default();
        env.inject(vec![
            Message::new(0, &sv, 1, 0.0),
            Message::new(1, &sv, 2, 0.0),
        ]);
        let records = env.drain_remaining(&topo);
        assert_eq!(records.len(), 2);
        assert!(records
            .iter()
            .all(|r| r.outcome == MessageOutcome::DroppedHorizon));
        assert!(env.active_links().is_empty());
    }
}
