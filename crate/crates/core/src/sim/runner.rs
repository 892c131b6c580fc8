//! Experiment execution: setup overlays plus the training/rollout loop.

use super::{apply_setup, MetricsLog, ScenarioConfig, SetupTag, SimError};
use crate::drl::{train, SchedulerPolicy, SliceAgent, TrainSetup};
use crate::iec61850::SliceId;
use crate::slicing::{partition_rbs, resolve_rana};
use std::collections::BTreeMap;

/// A failed run still carries the partial log, marked incomplete in its
/// manifest, so callers can persist it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: SimError,
    pub partial: Box<MetricsLog>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for RunFailure {}

/// Runs one experiment setup against the scenario: the learning setups
/// train the two-layer scheduler, the baselines execute their fixed rules.
/// The returned log is bit-reproducible for a fixed (config hash, seed,
/// build); trained agents accompany the learning setups.
#[allow(clippy::type_complexity)]
pub fn run_experiment(
    base: &ScenarioConfig,
    setup: SetupTag,
    seed: u64,
) -> Result<(MetricsLog, Option<BTreeMap<SliceId, SliceAgent>>), Box<RunFailure>> {
    let cfg = apply_setup(base, setup);
    let policy = match setup {
        SetupTag::Beyond5gPlus | SetupTag::Default5g => SchedulerPolicy::Learned,
        SetupTag::BaselineRr => SchedulerPolicy::RoundRobin,
        SetupTag::BaselineGreedy => SchedulerPolicy::GreedyMaxGain,
    };
    let partition = partition_rbs(&cfg.ril, cfg.radio.num_rbs).map_err(|e| {
        Box::new(RunFailure {
            error: SimError::Validation(vec![e.to_string()]),
            partial: Box::new(MetricsLog::from_train_log(
                Default::default(),
                &cfg.config_hash,
                setup.name(),
                seed,
                false,
            )),
        })
    })?;

    let train_setup = TrainSetup {
        topo: &cfg.topology,
        radio: cfg.radio.clone(),
        profiles: cfg.profiles.clone(),
        script: cfg.script.clone(),
        partition,
        rsf: cfg.rsf.clone(),
        fixed_delay_s: resolve_rana(&cfg.rana),
        training: cfg.training.clone(),
        seed,
        policy,
    };

    match train(&train_setup) {
        Ok(outcome) => Ok((
            MetricsLog::from_train_log(outcome.log, &cfg.config_hash, setup.name(), seed, true),
            outcome.agents,
        )),
        Err(failure) => Err(Box::new(RunFailure {
            error: SimError::Runtime(failure.to_string()),
            partial: Box::new(MetricsLog::from_train_log(
                failure.partial,
                &cfg.config_hash,
                setup.name(),
                seed,
                false,
            )),
        })),
    }
}
