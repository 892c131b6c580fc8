//! Windowed run summaries and pairwise comparison.

use super::{MetricsLog, SimError};
use crate::iec61850::SliceId;
use crate::slicing::rsm_violation_rate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SUMMARY_SCHEMA: &str = "gridslice-summary-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceWindowSummary {
    pub samples: u64,
    pub p50_latency_s: Option<f64>,
    pub p95_latency_s: Option<f64>,
    pub p99_latency_s: Option<f64>,
    pub violations: u64,
    pub violation_rate: f64,
    pub no_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub index: u64,
    pub slot_start: u64,
    pub slot_end: u64,
    pub slices: BTreeMap<SliceId, SliceWindowSummary>,
    pub reward_mean: Option<f64>,
    pub reward_min: Option<f64>,
    pub reward_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema: String,
    pub config_hash: String,
    pub setup: String,
    pub seed: u64,
    pub total_slots: u64,
    pub window_count: u64,
    pub windows: Vec<WindowSummary>,
}

/// Nearest-rank percentile of a sorted sample list.
fn nearest_rank(sorted: &[f64], percentile: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Splits the slot axis into `window_count` even windows and aggregates
/// per-slice latency percentiles, violation rates, and reward statistics.
/// Refuses incomplete logs.
pub fn summarize(log: &MetricsLog, window_count: u64) -> Result<RunSummary, SimError> {
    if !log.manifest.complete {
        return Err(SimError::Runtime(format!(
            "log is marked incomplete in its manifest (setup {}, seed {}); refusing to summarize",
            log.manifest.setup, log.manifest.seed
        )));
    }
    if window_count == 0 {
        return Err(SimError::Runtime("window_count must be > 0".into()));
    }
    let total_slots = log.manifest.total_slots.max(1);
    let width = total_slots.div_ceil(window_count);
    let observations = log.observations();

    let mut windows = Vec::new();
    let mut index = 0u64;
    let mut start = 0u64;
    while start < total_slots {
        let end = (start + width).min(total_slots);
        let rates = rsm_violation_rate(&observations, start..end);

        let mut slices = BTreeMap::new();
        for slice in SliceId::ALL {
            let mut latencies: Vec<f64> = log
                .steps
                .iter()
                .filter(|r| r.slice == slice && r.slot >= start && r.slot < end)
                .filter_map(|r| r.latency_s)
                .collect();
            latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let rate = &rates[&slice];
            slices.insert(
                slice,
                SliceWindowSummary {
                    samples: rate.samples,
                    p50_latency_s: nearest_rank(&latencies, 50.0),
                    p95_latency_s: nearest_rank(&latencies, 95.0),
                    p99_latency_s: nearest_rank(&latencies, 99.0),
                    violations: rate.violations,
                    violation_rate: rate.rate,
                    no_data: rate.no_data,
                },
            );
        }

        let rewards: Vec<f64> = log
            .learning
            .iter()
            .filter(|r| r.slot >= start && r.slot < end)
            .map(|r| r.reward)
            .collect();
        let (reward_mean, reward_min, reward_max) = if rewards.is_empty() {
            (None, None, None)
        } else {
            (
                Some(rewards.iter().sum::<f64>() / rewards.len() as f64),
                Some(rewards.iter().cloned().fold(f64::INFINITY, f64::min)),
                Some(rewards.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
            )
        };

        windows.push(WindowSummary {
            index,
            slot_start: start,
            slot_end: end,
            slices,
            reward_mean,
            reward_min,
            reward_max,
        });
        index += 1;
        start = end;
    }

    Ok(RunSummary {
        schema: SUMMARY_SCHEMA.to_string(),
        config_hash: log.manifest.config_hash.clone(),
        setup: log.manifest.setup.clone(),
        seed: log.manifest.seed,
        total_slots: log.manifest.total_slots,
        window_count,
        windows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceComparison {
    /// b minus a, final window.
    pub p50_latency_delta_s: Option<f64>,
    pub violation_rate_delta: f64,
    /// Which run wins (lower is better): "a", "b", or "tie".
    pub latency_winner: String,
    pub violation_winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub setup_a: String,
    pub setup_b: String,
    pub seed_a: u64,
    pub seed_b: u64,
    pub slices: BTreeMap<SliceId, SliceComparison>,
}

fn winner(delta: f64) -> String {
    if delta < 0.0 {
        "b".to_string()
    } else if delta > 0.0 {
        "a".to_string()
    } else {
        "tie".to_string()
    }
}

/// Per-slice final-window deltas between two summaries of the same
/// scenario. Refuses mismatched scenario hashes.
pub fn compare_runs(a: &RunSummary, b: &RunSummary) -> Result<ComparisonReport, SimError> {
    if a.config_hash != b.config_hash {
        return Err(SimError::Runtime(format!(
            "scenario hashes differ ({} vs {}); comparisons need the same scenario",
            a.config_hash, b.config_hash
        )));
    }
    let (Some(last_a), Some(last_b)) = (a.windows.last(), b.windows.last()) else {
        return Err(SimError::Runtime("empty summaries cannot be compared".into()));
    };
    let mut slices = BTreeMap::new();
    for slice in SliceId::ALL {
        let sa = &last_a.slices[&slice];
        let sb = &last_b.slices[&slice];
        let p50_delta = match (sa.p50_latency_s, sb.p50_latency_s) {
            (Some(x), Some(y)) => Some(y - x),
            _ => None,
        };
        let rate_delta = sb.violation_rate - sa.violation_rate;
        slices.insert(
            slice,
            SliceComparison {
                p50_latency_delta_s: p50_delta,
                violation_rate_delta: rate_delta,
                latency_winner: p50_delta.map(winner).unwrap_or_else(|| "tie".into()),
                violation_winner: winner(rate_delta),
            },
        );
    }
    Ok(ComparisonReport {
        config_hash: a.config_hash.clone(),
        setup_a: a.setup.clone(),
        setup_b: b.setup.clone(),
        seed_a: a.seed,
        seed_b: b.seed,
        slices,
    })
}
