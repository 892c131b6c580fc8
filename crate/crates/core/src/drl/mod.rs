//! The two-layer learning scheduler: a per-slice DQN chooses resource-block
//! assignments over a discrete action list, and an actor-critic with
//! exponentially weighted advantage estimation controls transmit power on
//! the continuous side. Both layers share one reward built from achieved
//! spectral efficiency and caused interference.

mod advantage;
mod agent;
mod policy;
mod replay;
mod reward;
mod state;
mod train;

pub use advantage::{dqn_td_targets, gae_advantages};
pub use agent::{enumerate_blocks, load_agent_checkpoint, SliceAgent};
pub use policy::{
    boltzmann_probabilities, boltzmann_sample, power_log_prob, power_log_prob_grads,
    sample_power, PowerSample,
};
pub use replay::ReplayMemory;
pub use reward::reward;
pub use state::{RsmStats, StateContext, StateEncoder};
pub use train::{
    device_carries, train, AllocationRecord, LearningRecord, PunctureRecord, SchedulerPolicy,
    TrainError, TrainLog, TrainOutcome, TrainSetup,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DrlError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

/// A contiguous RB block; the discrete action space enumerates these inside
/// the slice's admissible mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbBlock {
    pub start: usize,
    pub len: usize,
}

impl RbBlock {
    pub fn rbs(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }
}

/// One replayable transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: usize,
    pub power_dbm: f64,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

/// Hyperparameters for both learning layers and the rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    /// Discount factor gamma.
    pub discount: f64,
    pub gae_lambda: f64,
    pub temp_initial: f64,
    pub temp_min: f64,
    /// Fraction of total slots over which the temperature decays to its
    /// minimum.
    pub temp_decay_fraction: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub target_sync_period: u64,
    /// Interference penalty weight beta in the reward.
    pub interference_penalty: f64,
    pub episodes: u64,
    pub slots_per_episode: u64,
    pub hidden_layers: Vec<usize>,
    pub dqn_lr: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Actor-critic updates run every this many slots.
    pub actor_update_period: u64,
    pub entropy_bonus: f64,
    pub block_sizes: Vec<usize>,
    /// Include head-of-line deadline information in the state.
    pub deadline_features: bool,
    pub backlog_scale_bits: f64,
    /// Rolling window for the per-slice traffic statistics in the state.
    pub rsm_window_slots: u64,
    /// Messages unserved past this multiple of their SLA are dropped.
    pub drop_sla_multiple: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            discount: 0.95,
            gae_lambda: 0.95,
            temp_initial: 5.0,
            temp_min: 0.1,
            temp_decay_fraction: 0.6,
            replay_capacity: 10_000,
            batch_size: 64,
            target_sync_period: 200,
            interference_penalty: 0.5,
            episodes: 200,
            slots_per_episode: 500,
            hidden_layers: vec![64, 64],
            dqn_lr: 1e-3,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            actor_update_period: 32,
            entropy_bonus: 1e-3,
            block_sizes: vec![1, 2, 4],
            deadline_features: true,
            backlog_scale_bits: 50_000.0,
            rsm_window_slots: 200,
            drop_sla_multiple: 100.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !(0.0..1.0).contains(&self.discount) {
            errors.push(format!("training.discount: {} outside [0,1)", self.discount));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            errors.push(format!(
                "training.gae_lambda: {} outside [0,1]",
                self.gae_lambda
            ));
        }
        if !(self.temp_initial > 0.0 && self.temp_min > 0.0) {
            errors.push("training.temperature: initial and min must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.temp_decay_fraction) {
            errors.push("training.temp_decay_fraction: outside [0,1]".into());
        }
        if self.replay_capacity < self.batch_size {
            errors.push(format!(
                "training.replay_capacity: {} below batch_size {}",
                self.replay_capacity, self.batch_size
            ));
        }
        if self.batch_size == 0 {
            errors.push("training.batch_size: must be > 0".into());
        }
        if self.episodes == 0 || self.slots_per_episode == 0 {
            errors.push("training.episodes/slots_per_episode: must be > 0".into());
        }
        if self.block_sizes.is_empty()
            || self.block_sizes.iter().any(|&s| s == 0)
            || self.block_sizes.windows(2).any(|w| w[0] >= w[1])
        {
            errors.push("training.block_sizes: need strictly ascending positive sizes".into());
        }
        if self.actor_update_period == 0 || self.target_sync_period == 0 {
            errors.push("training.update periods: must be > 0".into());
        }
        if !(self.interference_penalty >= 0.0) {
            errors.push("training.interference_penalty: must be >= 0".into());
        }
        if !(self.drop_sla_multiple > 0.0) {
            errors.push("training.drop_sla_multiple: must be > 0".into());
        }
        errors
    }

    /// Exploration temperature at a global slot index.
    pub fn temperature_at(&self, slot: u64, total_slots: u64) -> f64 {
        let horizon = (self.temp_decay_fraction * total_slots as f64).max(1.0);
        if self.temp_initial <= self.temp_min {
            return self.temp_min;
        }
        let k = (self.temp_initial / self.temp_min).ln() / horizon;
        (self.temp_initial * (-k * slot as f64).exp()).max(self.temp_min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        assert!(TrainingConfig::default().validate().is_empty());
    }

    #[test]
    fn temperature_decays_to_minimum() {
        let cfg = TrainingConfig::default();
        let total = 10_000;
        assert!((cfg.temperature_at(0, total) - 5.0).abs() < 1e-12);
        let at_decay_end = cfg.temperature_at(6_000, total);
        assert!((at_decay_end - 0.1).abs() < 1e-9, "got {at_decay_end}");
        assert_eq!(cfg.temperature_at(9_999, total), 0.1);
        for s in (0..10_000).step_by(500) {
            assert!(cfg.temperature_at(s, total) > 0.0);
        }
    }

    #[test]
    fn invalid_configs_are_reported() {
        let mut cfg = TrainingConfig::default();
        cfg.replay_capacity = 8;
        cfg.batch_size = 64;
        cfg.discount = 1.0;
        let errors = cfg.validate();
        assert_eq!(errors.len(), 2, "{errors:?}");
    }
}
