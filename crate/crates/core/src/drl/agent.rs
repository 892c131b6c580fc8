//! Per-slice agent: the DQN pair (online + target), the actor-critic pair,
//! their optimizers, replay memory, and on-policy segment buffers.

use super::policy::{bound_log_std, bound_log_std_grad};
use super::{
    boltzmann_sample, dqn_td_targets, gae_advantages, power_log_prob_grads, sample_power,
    DrlError, Experience, RbBlock, ReplayMemory, TrainingConfig,
};
use crate::iec61850::SliceId;
use crate::nn::{
    load_net_from_str, write_net_to_string, Activation, DenseNet, Gradients, LayerSpec, Optimizer,
};
use crate::stream::{self, tag};
use rand::Rng;
use std::collections::BTreeMap;

/// Enumerates contiguous RB blocks of the configured sizes inside the
/// admissible mask, size-major then start-ascending. This fixed list is the
/// DQN's discrete action space.
pub fn enumerate_blocks(admissible: &[usize], sizes: &[usize]) -> Vec<RbBlock> {
    let mut blocks = Vec::new();
    for &len in sizes {
        if len == 0 {
            continue;
        }
        for window_start in 0..admissible.len().saturating_sub(len - 1) {
            let start = admissible[window_start];
            let contiguous = (0..len).all(|k| {
                window_start + k < admissible.len() && admissible[window_start + k] == start + k
            });
            if contiguous {
                blocks.push(RbBlock { start, len });
            }
        }
    }
    blocks
}

/// One on-policy step kept until the next actor-critic update.
#[derive(Debug, Clone)]
pub struct AcStep {
    pub aug_state: Vec<f64>,
    pub next_aug_state: Vec<f64>,
    pub pre_squash: f64,
    pub reward: f64,
    pub done: bool,
    pub slot: u64,
}

#[derive(Debug, Clone)]
pub struct SliceAgent {
    pub slice: SliceId,
    pub blocks: Vec<RbBlock>,
    pub dqn: DenseNet,
    pub target: DenseNet,
    pub actor: DenseNet,
    pub critic: DenseNet,
    dqn_opt: Optimizer,
    actor_opt: Optimizer,
    critic_opt: Optimizer,
    pub replay: ReplayMemory,
    pub dqn_updates: u64,
    segments: BTreeMap<usize, Vec<AcStep>>,
    state_dim: usize,
}

fn mlp_specs(input: usize, hidden: &[usize], output: usize) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &h in hidden {
        specs.push(LayerSpec::new(prev, h, Activation::Relu));
        prev = h;
    }
    specs.push(LayerSpec::new(prev, output, Activation::Linear));
    specs
}

impl SliceAgent {
    pub fn new(
        slice: SliceId,
        state_dim: usize,
        blocks: Vec<RbBlock>,
        cfg: &TrainingConfig,
        seed: u64,
    ) -> Result<Self, DrlError> {
        if blocks.is_empty() {
            return Err(DrlError::Invalid(format!(
                "slice {slice} has no admissible RB blocks"
            )));
        }
        let slice_tag = slice.priority() as u64;
        let dqn_specs = mlp_specs(state_dim, &cfg.hidden_layers, blocks.len());
        let actor_specs = mlp_specs(state_dim + 2, &cfg.hidden_layers, 2);
        let critic_specs = mlp_specs(state_dim + 2, &cfg.hidden_layers, 1);

        let dqn = DenseNet::seeded(
            &dqn_specs,
            &mut stream::substream(seed, &[tag::INIT, slice_tag, 0]),
        )?;
        let target = dqn.clone();
        let actor = DenseNet::seeded(
            &actor_specs,
            &mut stream::substream(seed, &[tag::INIT, slice_tag, 1]),
        )?;
        let critic = DenseNet::seeded(
            &critic_specs,
            &mut stream::substream(seed, &[tag::INIT, slice_tag, 2]),
        )?;

        Ok(Self {
            slice,
            blocks,
            dqn,
            target,
            actor,
            critic,
            dqn_opt: Optimizer::adam(cfg.dqn_lr),
            actor_opt: Optimizer::adam(cfg.actor_lr),
            critic_opt: Optimizer::adam(cfg.critic_lr),
            replay: ReplayMemory::new(cfg.replay_capacity),
            dqn_updates: 0,
            segments: BTreeMap::new(),
            state_dim,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Appends the chosen block's (center, size) encoding to the state; the
    /// actor and critic see the DQN's decision as part of their input.
    pub fn augment_state(&self, state: &[f64], block: RbBlock, num_rbs: usize) -> Vec<f64> {
        let mut aug = Vec::with_capacity(state.len() + 2);
        aug.extend_from_slice(state);
        let center = block.start as f64 + (block.len as f64 - 1.0) / 2.0;
        aug.push((center / (num_rbs.max(2) - 1) as f64) * 2.0 - 1.0);
        let max_len = self.blocks.iter().map(|b| b.len).max().unwrap_or(1);
        aug.push((block.len as f64 / max_len as f64) * 2.0 - 1.0);
        aug
    }

    /// Boltzmann RB-block choice at the given temperature.
    pub fn select_action(
        &self,
        state: &[f64],
        tau: f64,
        rng: &mut impl Rng,
    ) -> Result<usize, DrlError> {
        let q = self.dqn.forward(state)?;
        boltzmann_sample(&q, tau, rng)
    }

    /// Greedy (argmax-Q) choice for evaluation.
    pub fn greedy_action(&self, state: &[f64]) -> Result<usize, DrlError> {
        let q = self.dqn.forward(state)?;
        Ok(q.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0))
    }

    /// Samples a transmit power for the augmented state.
    pub fn sample_power_for(
        &self,
        aug_state: &[f64],
        min_dbm: f64,
        max_dbm: f64,
        rng: &mut impl Rng,
    ) -> Result<super::PowerSample, DrlError> {
        let head = self.actor.forward(aug_state)?;
        let mean = head[0];
        let log_std = bound_log_std(head[1]);
        Ok(sample_power(mean, log_std, min_dbm, max_dbm, rng))
    }

    pub fn push_segment_step(&mut self, device: usize, step: AcStep) {
        self.segments.entry(device).or_default().push(step);
    }

    pub fn has_segments(&self) -> bool {
        self.segments.values().any(|v| !v.is_empty())
    }

    /// One DQN update from a replay batch: squared TD error against the
    /// periodically synced target network, Adam step. Returns the loss, or
    /// None while the replay is underfilled.
    pub fn update_dqn(
        &mut self,
        batch_size: usize,
        gamma: f64,
        sync_period: u64,
        rng: &mut impl Rng,
    ) -> Result<Option<f64>, DrlError> {
        let Some(batch) = self.replay.sample(batch_size, rng) else {
            return Ok(None);
        };
        let targets = dqn_td_targets(&batch, &self.target, gamma)?;
        let batch: Vec<Experience> = batch.into_iter().cloned().collect();

        let mut grads = Gradients::zeros_like(&self.dqn);
        let mut loss = 0.0;
        let inv = 1.0 / batch.len() as f64;
        for (e, &y) in batch.iter().zip(&targets) {
            let (q, tape) = self.dqn.forward_recorded(&e.state)?;
            let err = q[e.action] - y;
            loss += err * err * inv;
            let mut out_grad = vec![0.0; q.len()];
            out_grad[e.action] = 2.0 * err * inv;
            let g = self.dqn.backward(&tape, &out_grad)?;
            grads.add_scaled(&g, 1.0);
        }
        if !loss.is_finite() {
            return Err(DrlError::Invalid(format!(
                "non-finite DQN loss {loss} for slice {}",
                self.slice
            )));
        }
        self.dqn_opt.step(&mut self.dqn, &grads)?;
        self.dqn_updates += 1;
        if self.dqn_updates % sync_period == 0 {
            self.target = self.dqn.clone();
        }
        Ok(Some(loss))
    }

    /// Actor-critic update over the buffered on-policy segments. Per-link
    /// trajectories are split at slot gaps and episode ends; each span gets
    /// exponentially weighted advantages, the critic regresses the matching
    /// lambda-returns, and the actor follows the score-function gradient
    /// with an entropy bonus. Returns (actor loss, critic loss), or None if
    /// no segments were pending.
    pub fn update_actor_critic(
        &mut self,
        gamma: f64,
        lambda: f64,
        entropy_bonus: f64,
    ) -> Result<Option<(f64, f64)>, DrlError> {
        let segments = std::mem::take(&mut self.segments);
        let mut spans: Vec<Vec<AcStep>> = Vec::new();
        for (_, steps) in segments {
            let mut current: Vec<AcStep> = Vec::new();
            for step in steps {
                let gap = current
                    .last()
                    .is_some_and(|prev| step.slot != prev.slot + 1 || prev.done);
                if gap {
                    spans.push(std::mem::take(&mut current));
                }
                current.push(step);
            }
            if !current.is_empty() {
                spans.push(current);
            }
        }
        if spans.is_empty() {
            return Ok(None);
        }

        let total_steps: usize = spans.iter().map(|s| s.len()).sum();
        let inv = 1.0 / total_steps as f64;
        let mut critic_grads = Gradients::zeros_like(&self.critic);
        let mut actor_grads = Gradients::zeros_like(&self.actor);
        let mut critic_loss = 0.0;
        let mut actor_loss = 0.0;

        for span in &spans {
            let mut values = Vec::with_capacity(span.len() + 1);
            let mut tapes = Vec::with_capacity(span.len());
            for step in span {
                let (v, tape) = self.critic.forward_recorded(&step.aug_state)?;
                values.push(v[0]);
                tapes.push(tape);
            }
            let last = span.last().unwrap();
            let bootstrap = if last.done {
                0.0
            } else {
                self.critic.forward(&last.next_aug_state)?[0]
            };
            values.push(bootstrap);

            let rewards: Vec<f64> = span.iter().map(|s| s.reward).collect();
            let advantages = gae_advantages(&rewards, &values, gamma, lambda)?;

            for (t, step) in span.iter().enumerate() {
                // Critic target: lambda-return consistent with the GAE
                // estimator.
                let lambda_return = advantages[t] + values[t];
                let err = values[t] - lambda_return;
                critic_loss += err * err * inv;
                let g = self.critic.backward(&tapes[t], &[2.0 * err * inv])?;
                critic_grads.add_scaled(&g, 1.0);

                // Actor: -A * grad log pi - entropy bonus.
                let (head, actor_tape) = self.actor.forward_recorded(&step.aug_state)?;
                let mean = head[0];
                let log_std = bound_log_std(head[1]);
                let std = log_std.exp();
                let z = step.pre_squash;
                let norm = (z - mean) / std;
                let log_prob_core =
                    -0.5 * norm * norm - log_std - 0.5 * (2.0 * std::f64::consts::PI).ln();
                let entropy = log_std + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
                actor_loss += (-advantages[t] * log_prob_core - entropy_bonus * entropy) * inv;

                let (g_mean, g_log_std) = power_log_prob_grads(mean, log_std, z);
                let d_raw = bound_log_std_grad(head[1]);
                let out_grad = vec![
                    -advantages[t] * g_mean * inv,
                    (-advantages[t] * g_log_std - entropy_bonus) * d_raw * inv,
                ];
                let g = self.actor.backward(&actor_tape, &out_grad)?;
                actor_grads.add_scaled(&g, 1.0);
            }
        }

        if !critic_loss.is_finite() || !actor_loss.is_finite() {
            return Err(DrlError::Invalid(format!(
                "non-finite actor-critic loss (actor {actor_loss}, critic {critic_loss}) for slice {}",
                self.slice
            )));
        }
        self.critic_opt.step(&mut self.critic, &critic_grads)?;
        self.actor_opt.step(&mut self.actor, &actor_grads)?;
        Ok(Some((actor_loss, critic_loss)))
    }

    /// Serializes the four nets with a run manifest header.
    pub fn write_checkpoint(&self, config_hash: &str, seed: u64, episodes: u64) -> String {
        let mut out = String::new();
        out.push_str("gridslice-agent v1\n");
        out.push_str(&format!("slice {}\n", self.slice));
        out.push_str(&format!("config_hash {config_hash}\n"));
        out.push_str(&format!("seed {seed}\n"));
        out.push_str(&format!("episodes {episodes}\n"));
        for (name, net) in [
            ("dqn", &self.dqn),
            ("target", &self.target),
            ("actor", &self.actor),
            ("critic", &self.critic),
        ] {
            out.push_str(&format!("section {name}\n"));
            out.push_str(&write_net_to_string(net));
        }
        out
    }
}

/// Parses an agent checkpoint; returns (slice, manifest pairs, nets by
/// section name).
#[allow(clippy::type_complexity)]
pub fn load_agent_checkpoint(
    text: &str,
) -> Result<(SliceId, BTreeMap<String, String>, BTreeMap<String, DenseNet>), DrlError> {
    let mut lines = text.lines().peekable();
    match lines.next() {
        Some("gridslice-agent v1") => {}
        other => {
            return Err(DrlError::Invalid(format!(
                "unsupported checkpoint header {other:?}"
            )))
        }
    }
    let mut manifest = BTreeMap::new();
    let mut slice = None;
    while let Some(&line) = lines.peek() {
        if line.starts_with("section ") {
            break;
        }
        lines.next();
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| DrlError::Invalid(format!("bad manifest line '{line}'")))?;
        if key == "slice" {
            slice = SliceId::from_name(value);
        }
        manifest.insert(key.to_string(), value.to_string());
    }
    let slice = slice.ok_or_else(|| DrlError::Invalid("missing slice line".into()))?;

    let mut nets = BTreeMap::new();
    let mut section: Option<(String, String)> = None;
    for line in lines {
        if let Some(name) = line.strip_prefix("section ") {
            if let Some((prev, body)) = section.take() {
                nets.insert(prev, load_net_from_str(&body)?);
            }
            section = Some((name.to_string(), String::new()));
        } else if let Some((_, body)) = section.as_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some((prev, body)) = section.take() {
        nets.insert(prev, load_net_from_str(&body)?);
    }
    Ok((slice, manifest, nets))
}
