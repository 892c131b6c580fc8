//! Flat exports: versioned JSON for whole logs and summaries, fixed-order
//! CSV for the individual record streams.
//!
//! CSV columns (documented contract, stable order):
//!
//! - steps.csv: slot,episode,device,slice,message_id,sinr_db,
//!   throughput_bps,queueing_s,serialization_s,latency_s,violated,outcome
//! - learning.csv: slot,device,slice,reward,dqn_loss,actor_loss,
//!   critic_loss,temperature
//! - allocations.csv: slot,device,slice,rbs ('|'-joined),tx_power_dbm
//! - punctures.csv: slot,urgent_device,urgent_slice,victim_device,
//!   victim_slice,rbs
//! - rsm_windows.csv: window_start,slice,samples,violations,rate
//! - summary.csv: window,slot_start,slot_end,slice,samples,p50_latency_s,
//!   p95_latency_s,p99_latency_s,violations,violation_rate,no_data,
//!   reward_mean
//!
//! Floats print in Rust's shortest round-trip form; absent values are empty
//! cells.

use super::{MetricsLog, RunSummary, SimError};
use crate::iec61850::SliceId;
use crate::radio::{MessageOutcome, StepRecord};
use crate::slicing::rsm_windows_csv;
use std::path::Path;

const STEPS_HEADER: &str = "slot,episode,device,slice,message_id,sinr_db,throughput_bps,queueing_s,serialization_s,latency_s,violated,outcome";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn outcome_name(o: MessageOutcome) -> &'static str {
    match o {
        MessageOutcome::Completed => "completed",
        MessageOutcome::DroppedExpired => "dropped_expired",
        MessageOutcome::DroppedHorizon => "dropped_horizon",
    }
}

fn outcome_from(name: &str) -> Result<MessageOutcome, SimError> {
    match name {
        "completed" => Ok(MessageOutcome::Completed),
        "dropped_expired" => Ok(MessageOutcome::DroppedExpired),
        "dropped_horizon" => Ok(MessageOutcome::DroppedHorizon),
        other => Err(SimError::Runtime(format!("unknown outcome '{other}'"))),
    }
}

pub fn steps_to_csv(steps: &[StepRecord]) -> String {
    let mut out = String::from(STEPS_HEADER);
    out.push('\n');
    for r in steps {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.slot,
            r.episode,
            r.device,
            r.slice,
            r.message_id,
            opt(r.sinr_db),
            r.throughput_bps,
            r.queueing_s,
            r.serialization_s,
            opt(r.latency_s),
            r.violated,
            outcome_name(r.outcome),
        ));
    }
    out
}

pub fn import_steps_csv(text: &str) -> Result<Vec<StepRecord>, SimError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == STEPS_HEADER => {}
        other => {
            return Err(SimError::Runtime(format!(
                "bad steps.csv header: {other:?}"
            )))
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(SimError::Runtime(format!(
                "steps.csv row {i}: expected 12 fields, got {}",
                f.len()
            )));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64, SimError> {
            s.parse()
                .map_err(|_| SimError::Runtime(format!("steps.csv row {i}: bad {what} '{s}'")))
        };
        let parse_opt = |s: &str, what: &str| -> Result<Option<f64>, SimError> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, what).map(Some)
            }
        };
        out.push(StepRecord {
            slot: f[0]
                .parse()
                .map_err(|_| SimError::Runtime(format!("steps.csv row {i}: bad slot")))?,
            episode: f[1]
                .parse()
                .map_err(|_| SimError::Runtime(format!("steps.csv row {i}: bad episode")))?,
            device: f[2].to_string(),
            slice: SliceId::from_name(f[3])
                .ok_or_else(|| SimError::Runtime(format!("steps.csv row {i}: bad slice")))?,
            message_id: f[4]
                .parse()
                .map_err(|_| SimError::Runtime(format!("steps.csv row {i}: bad message id")))?,
            sinr_db: parse_opt(f[5], "sinr")?,
            throughput_bps: parse_f64(f[6], "throughput")?,
            queueing_s: parse_f64(f[7], "queueing")?,
            serialization_s: parse_f64(f[8], "serialization")?,
            latency_s: parse_opt(f[9], "latency")?,
            violated: f[10]
                .parse()
                .map_err(|_| SimError::Runtime(format!("steps.csv row {i}: bad violated")))?,
            outcome: outcome_from(f[11])?,
        });
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<(), SimError> {
    std::fs::write(path, contents).map_err(|e| SimError::io(path, e))
}

/// Writes the whole log as one versioned JSON document.
pub fn export_log_json(log: &MetricsLog, path: &Path) -> Result<(), SimError> {
    let json =
        serde_json::to_string_pretty(log).map_err(|e| SimError::Runtime(e.to_string()))?;
    write(path, &json)
}

pub fn import_log_json(path: &Path) -> Result<MetricsLog, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let log: MetricsLog =
        serde_json::from_str(&text).map_err(|e| SimError::Runtime(format!("parse {e}")))?;
    if log.manifest.schema != super::metrics::METRICSLOG_SCHEMA {
        return Err(SimError::Runtime(format!(
            "unsupported log schema '{}'",
            log.manifest.schema
        )));
    }
    Ok(log)
}

/// Writes the record streams as CSV files plus the manifest into `dir`.
pub fn export_log_csv(log: &MetricsLog, dir: &Path) -> Result<(), SimError> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    write(&dir.join("steps.csv"), &steps_to_csv(&log.steps))?;

    let mut learning = String::from(
        "slot,device,slice,reward,dqn_loss,actor_loss,critic_loss,temperature\n",
    );
    for r in &log.learning {
        learning.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.slot,
            r.device,
            r.slice,
            r.reward,
            opt(r.dqn_loss),
            opt(r.actor_loss),
            opt(r.critic_loss),
            r.temperature
        ));
    }
    write(&dir.join("learning.csv"), &learning)?;

    let mut allocations = String::from("slot,device,slice,rbs,tx_power_dbm\n");
    for r in &log.allocations {
        let rbs: Vec<String> = r.rbs.iter().map(|x| x.to_string()).collect();
        allocations.push_str(&format!(
            "{},{},{},{},{}\n",
            r.slot,
            r.device,
            r.slice,
            rbs.join("|"),
            r.tx_power_dbm
        ));
    }
    write(&dir.join("allocations.csv"), &allocations)?;

    let mut punctures =
        String::from("slot,urgent_device,urgent_slice,victim_device,victim_slice,rbs\n");
    for r in &log.punctures {
        let rbs: Vec<String> = r.rbs.iter().map(|x| x.to_string()).collect();
        punctures.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.slot,
            r.urgent_device,
            r.urgent_slice,
            r.victim_device,
            r.victim_slice,
            rbs.join("|")
        ));
    }
    write(&dir.join("punctures.csv"), &punctures)?;

    let windows = log.manifest.total_slots.div_ceil(500).max(1);
    write(
        &dir.join("rsm_windows.csv"),
        &rsm_windows_csv(&log.observations(), log.manifest.total_slots, windows),
    )?;

    let manifest = serde_json::to_string_pretty(&log.manifest)
        .map_err(|e| SimError::Runtime(e.to_string()))?;
    write(&dir.join("manifest.json"), &manifest)
}

pub fn export_summary_json(summary: &RunSummary, path: &Path) -> Result<(), SimError> {
    let json =
        serde_json::to_string_pretty(summary).map_err(|e| SimError::Runtime(e.to_string()))?;
    write(path, &json)
}

pub fn import_summary_json(path: &Path) -> Result<RunSummary, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let summary: RunSummary =
        serde_json::from_str(&text).map_err(|e| SimError::Runtime(format!("parse {e}")))?;
    if summary.schema != super::summary::SUMMARY_SCHEMA {
        return Err(SimError::Runtime(format!(
            "unsupported summary schema '{}'",
            summary.schema
        )));
    }
    Ok(summary)
}

pub fn export_summary_csv(summary: &RunSummary, path: &Path) -> Result<(), SimError> {
    let mut out = String::from(
        "window,slot_start,slot_end,slice,samples,p50_latency_s,p95_latency_s,p99_latency_s,violations,violation_rate,no_data,reward_mean\n",
    );
    for w in &summary.windows {
        for slice in SliceId::ALL {
            let s = &w.slices[&slice];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                w.index,
                w.slot_start,
                w.slot_end,
                slice,
                s.samples,
                opt(s.p50_latency_s),
                opt(s.p95_latency_s),
                opt(s.p99_latency_s),
                s.violations,
                s.violation_rate,
                s.no_data,
                opt(w.reward_mean)
            ));
        }
    }
    write(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::MessageOutcome;

    fn sample_steps() -> Vec<StepRecord> {
        vec![
            StepRecord {
                slot: 0,
                episode: 0,
                device: "ied1".into(),
                slice: SliceId::Goose,
                message_id: 0,
                sinr_db: Some(31.25),
                throughput_bps: 6.912e6,
                queueing_s: 0.0,
                serialization_s: 1.5856481481481482e-4,
                latency_s: Some(2.0856481481481482e-4),
                violated: false,
                outcome: MessageOutcome::Completed,
            },
            StepRecord {
                slot: 9,
                episode: 0,
                device: "mu1".into(),
                slice: SliceId::Sv,
                message_id: 1,
                sinr_db: None,
                throughput_bps: 0.0,
                queueing_s: 1e-3,
                serialization_s: 0.0,
                latency_s: None,
                violated: true,
                outcome: MessageOutcome::DroppedExpired,
            },
        ]
    }

    #[test]
    fn steps_csv_roundtrip_losslessly() {
        let steps = sample_steps();
        let csv = steps_to_csv(&steps);
        let back = import_steps_csv(&csv).unwrap();
        assert_eq!(steps, back);
        // Row count = record count + header.
        assert_eq!(csv.lines().count(), steps.len() + 1);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(import_steps_csv("nope\n1,2\n").is_err());
    }
}
