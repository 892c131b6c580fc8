//! The rollout/training loop shared by the learning setups and the
//! fixed-policy baselines.
//!
//! Per slot and active link: encode state, pick an RB block (Boltzmann over
//! the DQN's Q-values, or a baseline rule), sample a transmit power (actor,
//! or max power for baselines), optionally puncture for urgent traffic,
//! step the environment, reward every link, and push experiences. The DQN
//! updates from replay each slot; the actor-critic updates from fresh
//! on-policy segments on its own period.

use super::agent::AcStep;
use super::{
    enumerate_blocks, reward, RbBlock, RsmStats, SliceAgent, StateContext, StateEncoder,
    TrainingConfig,
};
use crate::drl::Experience;
use crate::iec61850::{
    apply_fault_script, generate_traffic, ArrivalModel, FaultScript, SliceId, SliceProfile,
};
use crate::radio::{DeviceKind, EnvConfig, EnvState, LinkAllocation, RadioConfig, StepRecord, Topology};
use crate::slicing::{puncture, RsfConfig, SlicePartition};
use crate::stream::{self, tag};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How allocations are decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// DQN + actor-critic.
    Learned,
    /// Rotating block assignment, max power.
    RoundRobin,
    /// Best-gain admissible block every slot, max power.
    GreedyMaxGain,
}

pub struct TrainSetup<'a> {
    pub topo: &'a Topology,
    pub radio: RadioConfig,
    pub profiles: BTreeMap<SliceId, SliceProfile>,
    pub script: FaultScript,
    pub partition: SlicePartition,
    pub rsf: RsfConfig,
    pub fixed_delay_s: f64,
    pub training: TrainingConfig,
    pub seed: u64,
    pub policy: SchedulerPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRecord {
    pub slot: u64,
    pub device: String,
    pub slice: SliceId,
    pub reward: f64,
    pub dqn_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub slot: u64,
    pub device: String,
    pub slice: SliceId,
    pub rbs: Vec<usize>,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PunctureRecord {
    pub slot: u64,
    pub urgent_device: String,
    pub urgent_slice: SliceId,
    pub victim_device: String,
    pub victim_slice: SliceId,
    pub rbs: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
    pub learning: Vec<LearningRecord>,
    pub allocations: Vec<AllocationRecord>,
    pub punctures: Vec<PunctureRecord>,
    pub total_injected: u64,
    pub total_slots: u64,
    pub starvation_events: u64,
}

pub struct TrainOutcome {
    pub agents: Option<BTreeMap<SliceId, SliceAgent>>,
    pub log: TrainLog,
}

/// Mid-run failure with diagnostics; carries the partial log so the caller
/// can persist it marked incomplete.
#[derive(Debug, thiserror::Error)]
#[error("training aborted at slot {slot}: {message}")]
pub struct TrainError {
    pub message: String,
    pub slot: u64,
    pub partial: TrainLog,
}

/// Which slices a device kind sources background traffic for. SSCs emit
/// GOOSE only through the fault script.
pub fn device_carries(kind: DeviceKind, slice: SliceId) -> bool {
    matches!(
        (kind, slice),
        (DeviceKind::Ied, SliceId::Goose)
            | (DeviceKind::Ied, SliceId::Mms)
            | (DeviceKind::Mu, SliceId::Sv)
    )
}

pub fn train(setup: &TrainSetup) -> Result<TrainOutcome, Box<TrainError>> {
    let training = &setup.training;
    let total_slots = training.episodes * training.slots_per_episode;
    let slot_duration = setup.rsf.slot_duration_s();
    let env_cfg = EnvConfig {
        radio: setup.radio.clone(),
        slot_duration_s: slot_duration,
        fixed_delay_s: setup.fixed_delay_s,
        drop_sla_multiple: training.drop_sla_multiple,
        admissible: setup
            .partition
            .admissible
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .collect(),
        profiles: setup.profiles.clone(),
    };
    let encoder = StateEncoder {
        num_rbs: setup.radio.num_rbs,
        deadline_features: training.deadline_features,
        backlog_scale_bits: training.backlog_scale_bits,
    };

    let blocks: BTreeMap<SliceId, Vec<RbBlock>> = SliceId::ALL
        .iter()
        .map(|&slice| {
            (
                slice,
                enumerate_blocks(&setup.partition.admissible[&slice], &training.block_sizes),
            )
        })
        .collect();

    let mut log = TrainLog {
        total_slots,
        ..TrainLog::default()
    };
    let fail = |message: String, slot: u64, log: &mut TrainLog| {
        Box::new(TrainError {
            message,
            slot,
            partial: std::mem::take(log),
        })
    };

    let mut agents: Option<BTreeMap<SliceId, SliceAgent>> = match setup.policy {
        SchedulerPolicy::Learned => {
            let mut map = BTreeMap::new();
            for slice in SliceId::ALL {
                let agent = SliceAgent::new(
                    slice,
                    encoder.dim(),
                    blocks[&slice].clone(),
                    training,
                    setup.seed,
                )
                .map_err(|e| fail(e.to_string(), 0, &mut TrainLog::default()))?;
                map.insert(slice, agent);
            }
            Some(map)
        }
        _ => None,
    };

    let mut next_id: u64 = 0;
    let priority0 = SliceId::ALL
        .iter()
        .copied()
        .min_by_key(|s| s.priority())
        .unwrap();

    for episode in 0..training.episodes {
        let start_slot = episode * training.slots_per_episode;
        let mut env = EnvState::new(setup.topo, &env_cfg, setup.seed, episode, start_slot);
        let mut rsm = RsmStats::new(training.rsm_window_slots);
        let mut last_action: BTreeMap<(usize, SliceId), (usize, f64)> = BTreeMap::new();

        for episode_slot in 0..training.slots_per_episode {
            let global_slot = start_slot + episode_slot;
            let t0 = env.time_s;
            let t1 = t0 + slot_duration;
            let temperature = training.temperature_at(global_slot, total_slots);

            // 1. Expire overdue messages.
            log.steps.extend(env.drop_expired(setup.topo, &env_cfg));

            // 2. Inject background traffic and scripted bursts.
            let mut arrivals: BTreeMap<SliceId, u64> = BTreeMap::new();
            for &device in &setup.topo.endpoints() {
                let kind = setup.topo.nodes[device].kind;
                for slice in SliceId::ALL {
                    if !device_carries(kind, slice) {
                        continue;
                    }
                    let profile = &setup.profiles[&slice];
                    if matches!(profile.arrival, ArrivalModel::EventDriven) {
                        continue;
                    }
                    let mut rng = stream::substream(
                        setup.seed,
                        &[tag::TRAFFIC, global_slot, device as u64, slice.priority() as u64],
                    );
                    let msgs = generate_traffic(profile, device, t0, t1, &mut rng, &mut next_id)
                        .map_err(|e| fail(e.to_string(), global_slot, &mut log))?;
                    *arrivals.entry(slice).or_default() += msgs.len() as u64;
                    env.inject(msgs);
                }
            }
            let burst = apply_fault_script(&setup.script, &setup.profiles[&SliceId::Goose], t0, t1, &mut next_id);
            *arrivals.entry(SliceId::Goose).or_default() += burst.len() as u64;
            env.inject(burst);

            // 3. Decide allocations per active link.
            let active = env.active_links();
            let mut allocations: Vec<LinkAllocation> = Vec::with_capacity(active.len());
            // (device, slice, state, action, aug, pre_squash) for learning.
            let mut decisions: Vec<(usize, SliceId, Vec<f64>, usize, Vec<f64>, f64)> = Vec::new();
            let mut rr_rank: BTreeMap<SliceId, usize> = BTreeMap::new();

            for &(device, slice) in &active {
                let slice_blocks = &blocks[&slice];
                let max_power = setup.topo.nodes[device].max_tx_power_dbm;
                match setup.policy {
                    SchedulerPolicy::Learned => {
                        let agents_ref = agents.as_ref().unwrap();
                        let agent = &agents_ref[&slice];
                        let ctx = StateContext {
                            device,
                            slice,
                            env: &env,
                            topo: setup.topo,
                            radio: &setup.radio,
                            partition: &setup.partition,
                            profiles: &setup.profiles,
                            last_action: last_action.get(&(device, slice)).copied(),
                            num_actions: slice_blocks.len(),
                            rsm: &rsm,
                            now: t0,
                        };
                        let state = encoder.encode(&ctx);
                        let mut explore_rng = stream::substream(
                            setup.seed,
                            &[tag::EXPLORE, global_slot, device as u64, slice.priority() as u64],
                        );
                        let action = agent
                            .select_action(&state, temperature, &mut explore_rng)
                            .map_err(|e| fail(e.to_string(), global_slot, &mut log))?;
                        let block = slice_blocks[action];
                        let aug = agent.augment_state(&state, block, setup.radio.num_rbs);
                        let mut power_rng = stream::substream(
                            setup.seed,
                            &[tag::POWER, global_slot, device as u64, slice.priority() as u64],
                        );
                        let sample = agent
                            .sample_power_for(
                                &aug,
                                setup.radio.tx_power_min_dbm,
                                max_power,
                                &mut power_rng,
                            )
                            .map_err(|e| fail(e.to_string(), global_slot, &mut log))?;
                        allocations.push(LinkAllocation::new(
                            device,
                            slice,
                            block.rbs(),
                            sample.power_dbm,
                        ));
                        decisions.push((device, slice, state, action, aug, sample.pre_squash));
                    }
                    SchedulerPolicy::RoundRobin => {
                        let rank = rr_rank.entry(slice).or_insert(0);
                        let idx = (global_slot as usize + *rank) % slice_blocks.len();
                        *rank += 1;
                        allocations.push(LinkAllocation::new(
                            device,
                            slice,
                            slice_blocks[idx].rbs(),
                            max_power,
                        ));
                    }
                    SchedulerPolicy::GreedyMaxGain => {
                        let cell = setup.topo.serving_cell_of(device);
                        let gain = env.channel.gain(device, cell);
                        let mut best = 0usize;
                        let mut best_score = f64::NEG_INFINITY;
                        for (i, b) in slice_blocks.iter().enumerate() {
                            let score: f64 = b
                                .rbs()
                                .iter()
                                .map(|&rb| gain * setup.radio.rb_offset_linear(rb))
                                .sum();
                            if score > best_score {
                                best_score = score;
                                best = i;
                            }
                        }
                        allocations.push(LinkAllocation::new(
                            device,
                            slice,
                            slice_blocks[best].rbs(),
                            max_power,
                        ));
                    }
                }
            }

            // 4. Puncture for urgent traffic.
            if setup.rsf.puncturing_enabled {
                let urgent: Vec<(usize, SliceId)> = active
                    .iter()
                    .copied()
                    .filter(|&(_, slice)| slice == priority0)
                    .collect();
                if !urgent.is_empty() {
                    let outcome = puncture(
                        &allocations,
                        &urgent,
                        setup.rsf.puncture_demand_rbs,
                        &setup.partition,
                    );
                    for e in &outcome.events {
                        log.punctures.push(PunctureRecord {
                            slot: global_slot,
                            urgent_device: setup.topo.device_name(e.urgent_device).to_string(),
                            urgent_slice: e.urgent_slice,
                            victim_device: setup.topo.device_name(e.victim_device).to_string(),
                            victim_slice: e.victim_slice,
                            rbs: e.rbs.clone(),
                        });
                    }
                    log.starvation_events += outcome.starved.len() as u64;
                    allocations = outcome.schedule;
                }
            }

            for alloc in &allocations {
                log.allocations.push(AllocationRecord {
                    slot: global_slot,
                    device: setup.topo.device_name(alloc.device).to_string(),
                    slice: alloc.slice,
                    rbs: alloc.rbs.clone(),
                    tx_power_dbm: alloc.tx_power_dbm,
                });
            }

            // 5. Step the environment.
            let out = env
                .step(&allocations, setup.topo, &env_cfg)
                .map_err(|e| fail(e.to_string(), global_slot, &mut log))?;

            // 6. Traffic awareness update.
            let mut completions: BTreeMap<SliceId, (u64, u64)> = BTreeMap::new();
            for rec in &out.records {
                let entry = completions.entry(rec.slice).or_default();
                entry.0 += 1;
                if rec.violated {
                    entry.1 += 1;
                }
            }
            for slice in SliceId::ALL {
                let (c, v) = completions.get(&slice).copied().unwrap_or((0, 0));
                let a = arrivals.get(&slice).copied().unwrap_or(0);
                rsm.record(global_slot, slice, a, c, v);
            }
            log.steps.extend(out.records);

            // 7. Rewards, experiences, learning curves.
            let done = episode_slot + 1 == training.slots_per_episode;
            let mut slot_losses: BTreeMap<SliceId, (Option<f64>, Option<f64>, Option<f64>)> =
                BTreeMap::new();
            let mut link_rewards: Vec<(usize, SliceId, f64)> = Vec::new();
            for stats in &out.link_stats {
                let caused: Vec<(f64, f64)> = stats
                    .caused
                    .iter()
                    .map(|&(_, _, i_w, n_w)| (i_w, n_w))
                    .collect();
                let r = reward(stats.se_sum, &caused, training.interference_penalty);
                if !r.is_finite() {
                    return Err(fail(
                        format!(
                            "non-finite reward for {} {}",
                            setup.topo.device_name(stats.device),
                            stats.slice
                        ),
                        global_slot,
                        &mut log,
                    ));
                }
                link_rewards.push((stats.device, stats.slice, r));
            }

            if let Some(agents_map) = agents.as_mut() {
                // Record the action just taken before encoding next states.
                for d in &decisions {
                    let (device, slice, action) = (d.0, d.1, d.3);
                    let power = allocations
                        .iter()
                        .find(|al| al.device == device && al.slice == slice)
                        .map(|al| al.tx_power_dbm)
                        .unwrap_or(setup.radio.tx_power_min_dbm);
                    last_action.insert((device, slice), (action, power));
                }

                for (device, slice, state, action, aug, pre_squash) in decisions {
                    let r = link_rewards
                        .iter()
                        .find(|(d, s, _)| *d == device && *s == slice)
                        .map(|(_, _, r)| *r)
                        .unwrap_or(0.0);
                    let agent = agents_map.get_mut(&slice).unwrap();
                    let ctx = StateContext {
                        device,
                        slice,
                        env: &env,
                        topo: setup.topo,
                        radio: &setup.radio,
                        partition: &setup.partition,
                        profiles: &setup.profiles,
                        last_action: last_action.get(&(device, slice)).copied(),
                        num_actions: agent.blocks.len(),
                        rsm: &rsm,
                        now: env.time_s,
                    };
                    let next_state = encoder.encode(&ctx);
                    let block = agent.blocks[action];
                    let next_aug = agent.augment_state(&next_state, block, setup.radio.num_rbs);
                    agent.replay.push(Experience {
                        state,
                        action,
                        power_dbm: last_action[&(device, slice)].1,
                        reward: r,
                        next_state,
                        done,
                    });
                    agent.push_segment_step(
                        device,
                        AcStep {
                            aug_state: aug,
                            next_aug_state: next_aug,
                            pre_squash,
                            reward: r,
                            done,
                            slot: global_slot,
                        },
                    );
                }

                // 8. DQN update each slot per slice agent.
                for slice in SliceId::ALL {
                    let agent = agents_map.get_mut(&slice).unwrap();
                    let mut rng = stream::substream(
                        setup.seed,
                        &[tag::REPLAY, slice.priority() as u64, agent.dqn_updates],
                    );
                    match agent.update_dqn(
                        training.batch_size,
                        training.discount,
                        training.target_sync_period,
                        &mut rng,
                    ) {
                        Ok(loss) => {
                            slot_losses.entry(slice).or_default().0 = loss;
                        }
                        Err(e) => {
                            return Err(fail(
                                format!("DQN update failed for {slice}: {e}"),
                                global_slot,
                                &mut log,
                            ))
                        }
                    }
                }

                // 9. Actor-critic update on its period.
                if (global_slot + 1) % training.actor_update_period == 0 {
                    for slice in SliceId::ALL {
                        let agent = agents_map.get_mut(&slice).unwrap();
                        match agent.update_actor_critic(
                            training.discount,
                            training.gae_lambda,
                            training.entropy_bonus,
                        ) {
                            Ok(Some((al, cl))) => {
                                let entry = slot_losses.entry(slice).or_default();
                                entry.1 = Some(al);
                                entry.2 = Some(cl);
                            }
                            Ok(None) => {}
                            Err(e) => {
                                return Err(fail(
                                    format!("actor-critic update failed for {slice}: {e}"),
                                    global_slot,
                                    &mut log,
                                ))
                            }
                        }
                    }
                }
            }

            for (device, slice, r) in link_rewards {
                let losses = slot_losses.get(&slice).copied().unwrap_or_default();
                log.learning.push(LearningRecord {
                    slot: global_slot,
                    device: setup.topo.device_name(device).to_string(),
                    slice,
                    reward: r,
                    dqn_loss: losses.0,
                    actor_loss: losses.1,
                    critic_loss: losses.2,
                    temperature,
                });
            }
        }

        // End of episode: unfinished messages drop at the horizon.
        log.steps.extend(env.drain_remaining(setup.topo));
    }

    log.total_injected = next_id;
    Ok(TrainOutcome { agents, log })
}
