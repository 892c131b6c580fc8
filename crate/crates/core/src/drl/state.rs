//! Per-link state encoding.
//!
//! Every feature is scaled into [-1, 1]. Observability is slice-local:
//! per-RB interference is reported only on the link's admissible RBs and
//! backlog only for slices sharing the link's pool, so under dedicated
//! isolation a link's state cannot depend on another slice's load.

use crate::iec61850::{SliceId, SliceProfile};
use crate::radio::{watts_to_dbm, EnvState, RadioConfig, Topology};
use crate::slicing::SlicePartition;
use std::collections::BTreeMap;

/// Rolling per-slice arrival and violation statistics (the data-traffic
/// awareness input to the scheduler state).
#[derive(Debug, Clone)]
pub struct RsmStats {
    window: u64,
    /// Per slice: (slot, arrivals, completions, violations) ring.
    history: BTreeMap<SliceId, std::collections::VecDeque<(u64, u64, u64, u64)>>,
}

impl RsmStats {
    pub fn new(window: u64) -> Self {
        let mut history = BTreeMap::new();
        for slice in SliceId::ALL {
            history.insert(slice, std::collections::VecDeque::new());
        }
        Self { window, history }
    }

    pub fn record(&mut self, slot: u64, slice: SliceId, arrivals: u64, completions: u64, violations: u64) {
        let ring = self.history.get_mut(&slice).unwrap();
        ring.push_back((slot, arrivals, completions, violations));
        let cutoff = slot.saturating_sub(self.window);
        while ring.front().is_some_and(|&(s, ..)| s < cutoff) {
            ring.pop_front();
        }
    }

    pub fn recent_arrivals(&self, slice: SliceId) -> u64 {
        self.history[&slice].iter().map(|&(_, a, _, _)| a).sum()
    }

    pub fn recent_violation_rate(&self, slice: SliceId) -> f64 {
        let completions: u64 = self.history[&slice].iter().map(|&(_, _, c, _)| c).sum();
        let violations: u64 = self.history[&slice].iter().map(|&(_, _, _, v)| v).sum();
        violations as f64 / completions.max(1) as f64
    }
}

/// Everything a link observes when its state is encoded.
pub struct StateContext<'a> {
    pub device: usize,
    pub slice: SliceId,
    pub env: &'a EnvState,
    pub topo: &'a Topology,
    pub radio: &'a RadioConfig,
    pub partition: &'a SlicePartition,
    pub profiles: &'a BTreeMap<SliceId, SliceProfile>,
    /// (action index, tx power dBm) of this link's previous slot, if any.
    pub last_action: Option<(usize, f64)>,
    pub num_actions: usize,
    pub rsm: &'a RsmStats,
    pub now: f64,
}

#[derive(Debug, Clone)]
pub struct StateEncoder {
    pub num_rbs: usize,
    pub deadline_features: bool,
    pub backlog_scale_bits: f64,
}

impl StateEncoder {
    pub fn dim(&self) -> usize {
        // gain + per-RB interference + 3 backlogs + 3 one-hot + deadline
        // + 2 last-action + mask + 2 traffic stats
        2 * self.num_rbs + 12
    }

    pub fn encode(&self, ctx: &StateContext<'_>) -> Vec<f64> {
        let mut f = Vec::with_capacity(self.dim());
        let cell = ctx.topo.serving_cell_of(ctx.device);
        let admissible = &ctx.partition.admissible[&ctx.slice];

        // Own channel gain to the serving cell, dB scaled from [-160, 0].
        let gain_db = 10.0 * ctx.env.channel.gain(ctx.device, cell).log10();
        f.push(((gain_db + 80.0) / 80.0).clamp(-1.0, 1.0));

        // Last-epoch interference per admissible RB (own contribution
        // removed), dBm scaled from [-130, -60]; -1 elsewhere.
        for rb in 0..self.num_rbs {
            if admissible.binary_search(&rb).is_ok() {
                let total = ctx.env.last_interference_w(cell, rb);
                let own = ctx.env.last_own_w(ctx.device, ctx.slice, rb);
                let foreign = (total - own).max(0.0);
                if foreign > 0.0 {
                    let dbm = watts_to_dbm(foreign);
                    f.push(((dbm + 130.0) / 70.0).clamp(-1.0, 1.0));
                } else {
                    f.push(-1.0);
                }
            } else {
                f.push(-1.0);
            }
        }

        // Queue backlog per slice, visible only within the sharing domain.
        let domain = ctx.partition.sharing_domain(ctx.slice);
        for slice in SliceId::ALL {
            if domain.contains(&slice) {
                let bits = ctx.env.backlog_bits(ctx.device, slice);
                f.push((bits / self.backlog_scale_bits).clamp(0.0, 1.0));
            } else {
                f.push(0.0);
            }
        }

        // Own slice one-hot.
        for slice in SliceId::ALL {
            f.push(if slice == ctx.slice { 1.0 } else { 0.0 });
        }

        // Head-of-line time-to-deadline in SLA units.
        if self.deadline_features {
            match ctx.env.head_of_line(ctx.device, ctx.slice) {
                Some(msg) => {
                    let sla = ctx.profiles[&ctx.slice].latency_sla_s;
                    f.push(((msg.deadline - ctx.now) / sla).clamp(-1.0, 1.0));
                }
                None => f.push(0.0),
            }
        } else {
            f.push(0.0);
        }

        // Previous action (block index, power), scaled.
        match ctx.last_action {
            Some((action, power)) => {
                let denom = (ctx.num_actions.max(2) - 1) as f64;
                f.push((action as f64 / denom) * 2.0 - 1.0);
                let span = ctx.radio.tx_power_max_dbm - ctx.radio.tx_power_min_dbm;
                f.push((((power - ctx.radio.tx_power_min_dbm) / span) * 2.0 - 1.0).clamp(-1.0, 1.0));
            }
            None => {
                f.push(0.0);
                f.push(0.0);
            }
        }

        // Admissible mask.
        for rb in 0..self.num_rbs {
            f.push(if admissible.binary_search(&rb).is_ok() {
                1.0
            } else {
                0.0
            });
        }

        // Own-slice traffic awareness.
        f.push((ctx.rsm.recent_arrivals(ctx.slice) as f64 / 50.0).clamp(0.0, 1.0));
        f.push(ctx.rsm.recent_violation_rate(ctx.slice).clamp(0.0, 1.0));

        debug_assert_eq!(f.len(), self.dim());
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{DeviceKind, DeviceNode, EnvConfig};
    use crate::slicing::{partition_rbs, RilPolicy};
    use crate::stream;
    use rand::Rng;

    fn fixture() -> (Topology, EnvConfig, SlicePartition, BTreeMap<SliceId, SliceProfile>) {
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
                kind: DeviceKind::Ied,
                position: [-100.0, 0.0],
                serving_cell: Some("g1".into()),
                max_tx_power_dbm: 23.0,
            },
        ];
        let topo = Topology::build(nodes, (-10.0, 30.0)).unwrap();
        let partition = partition_rbs(&RilPolicy::default(), 25).unwrap();
        let mut profiles = BTreeMap::new();
        profiles.insert(SliceId::Goose, SliceProfile::goose_default());
        profiles.insert(SliceId::Sv, SliceProfile::sv_default());
        profiles.insert(SliceId::Mms, SliceProfile::mms_default());
        let cfg = EnvConfig {
            radio: RadioConfig {
                shadowing_sigma_db: 0.0,
                ..RadioConfig::default()
            },
            slot_duration_s: 0.125e-3,
            fixed_delay_s: 0.05e-3,
            drop_sla_multiple: 100.0,
            admissible: partition
                .admissible
                .iter()
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            profiles: profiles.clone(),
        };
        (topo, cfg, partition, profiles)
    }

    fn encoder() -> StateEncoder {
        StateEncoder {
            num_rbs: 25,
            deadline_features: true,
            backlog_scale_bits: 50_000.0,
        }
    }

    #[test]
    fn idle_device_has_zero_backlog_features() {
        let (topo, cfg, partition, profiles) = fixture();
        let env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let rsm = RsmStats::new(200);
        let enc = encoder();
        let state = enc.encode(&StateContext {
            device: 1,
            slice: SliceId::Goose,
            env: &env,
            topo: &topo,
            radio: &cfg.radio,
            partition: &partition,
            profiles: &profiles,
            last_action: None,
            num_actions: 20,
            rsm: &rsm,
            now: 0.0,
        });
        assert_eq!(state.len(), enc.dim());
        // Backlog features (after gain + 25 interference entries).
        assert_eq!(&state[26..29], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_devices_encode_identically() {
        let (topo, cfg, partition, profiles) = fixture();
        let env = EnvState::new(&topo, &cfg, 1, 0, 0);
        let rsm = RsmStats::new(200);
        let enc = encoder();
        let mk = |device| {
            enc.encode(&StateContext {
                device,
                slice: SliceId::Mms,
                env: &env,
                topo: &topo,
                radio: &cfg.radio,
                partition: &partition,
                profiles: &profiles,
                last_action: None,
                num_actions: 20,
                rsm: &rsm,
                now: 0.0,
            })
        };
        assert_eq!(mk(1), mk(2), "mirrored positions produce identical vectors");
    }

    #[test]
    fn all_features_within_unit_bounds_randomized() {
        let (topo, cfg, partition, profiles) = fixture();
        let enc = encoder();
        let mut rng = stream::substream(5, &[0xfe]);
        let goose = SliceProfile::goose_default();
        for trial in 0..10_000 {
            let mut env = EnvState::new(&topo, &cfg, trial as u64, 0, 0);
            let mut rsm = RsmStats::new(200);
            rsm.record(
                0,
                SliceId::Goose,
                rng.random_range(0..100),
                rng.random_range(0..50),
                rng.random_range(0..50),
            );
            if rng.random::<bool>() {
                env.inject(vec![crate::iec61850::Message::new(
                    trial as u64,
                    &goose,
                    1,
                    rng.random_range(-1.0..1.0) * 1e-3,
                )]);
            }
            let last_action = if rng.random::<bool>() {
                Some((rng.random_range(0..20), rng.random_range(-10.0..23.0)))
            } else {
                None
            };
            let state = enc.encode(&StateContext {
                device: 1,
                slice: SliceId::Goose,
                env: &env,
                topo: &topo,
                radio: &cfg.radio,
                partition: &partition,
                profiles: &profiles,
                last_action,
                num_actions: 20,
                rsm: &rsm,
                now: rng.random_range(0.0..1.0) * 1e-3,
            });
            for (i, v) in state.iter().enumerate() {
                assert!(
                    (-1.0..=1.0).contains(v),
                    "feature {i} = {v} outside [-1, 1] on trial {trial}"
                );
            }
        }
    }

    #[test]
    fn dedicated_mode_hides_other_slices() {
        let (topo, cfg, partition, profiles) = fixture();
        let rsm = RsmStats::new(200);
        let enc = encoder();
        let mms = SliceProfile::mms_default();

        let mut env_loaded = EnvState::new(&topo, &cfg, 1, 0, 0);
        env_loaded.inject(vec![crate::iec61850::Message::new(0, &mms, 1, 0.0)]);
        let env_idle = EnvState::new(&topo, &cfg, 1, 0, 0);

        let mk = |env: &EnvState| {
            enc.encode(&StateContext {
                device: 1,
                slice: SliceId::Goose,
                env,
                topo: &topo,
                radio: &cfg.radio,
                partition: &partition,
                profiles: &profiles,
                last_action: None,
                num_actions: 20,
                rsm: &rsm,
                now: 0.0,
            })
        };
        assert_eq!(
            mk(&env_loaded),
            mk(&env_idle),
            "GOOSE state must not see MMS backlog under dedicated pools"
        );
    }
}
