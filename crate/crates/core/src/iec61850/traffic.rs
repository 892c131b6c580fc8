//! Background traffic generation and the self-healing fault script.

use super::{ArrivalModel, Iec61850Error, Message, SliceProfile};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Generates this profile's background arrivals for one source device over
/// the half-open window [t0, t1).
///
/// Periodic arrivals sit at k/rate for integer k, anchored at t = 0, so
/// consecutive windows partition the stream exactly. Poisson arrivals walk
/// exponential gaps from t0 using the supplied stream. Event-driven slices
/// produce nothing here; the fault script injects them.
pub fn generate_traffic(
    profile: &SliceProfile,
    source: usize,
    t0: f64,
    t1: f64,
    rng: &mut impl Rng,
    next_id: &mut u64,
) -> Result<Vec<Message>, Iec61850Error> {
    if !(t1 > t0) {
        return if t1 == t0 {
            Ok(Vec::new())
        } else {
            Err(Iec61850Error::Traffic(format!(
                "window [{t0}, {t1}) is inverted"
            )))
        };
    }
    let mut out = Vec::new();
    match profile.arrival {
        ArrivalModel::Periodic { rate_hz } => {
            if !(rate_hz > 0.0) {
                return Err(Iec61850Error::Traffic("nonpositive periodic rate".into()));
            }
            // Iterate candidate indices around the window and filter with
            // the exact boundary values, so slot-aligned windows never
            // double-count or skip an arrival.
            let k_lo = ((t0 * rate_hz).floor() as i64 - 1).max(0);
            let k_hi = (t1 * rate_hz).ceil() as i64 + 1;
            for k in k_lo..=k_hi {
                let t = k as f64 / rate_hz;
                if t >= t0 && t < t1 {
                    out.push(Message::new(*next_id, profile, source, t));
                    *next_id += 1;
                }
            }
        }
        ArrivalModel::Poisson { rate_hz } => {
            if !(rate_hz > 0.0) {
                return Err(Iec61850Error::Traffic("nonpositive poisson rate".into()));
            }
            let mut t = t0;
            loop {
                let u: f64 = rng.random::<f64>();
                // Guard against ln(0).
                t += -(1.0 - u).max(f64::MIN_POSITIVE).ln() / rate_hz;
                if t >= t1 {
                    break;
                }
                out.push(Message::new(*next_id, profile, source, t));
                *next_id += 1;
            }
        }
        ArrivalModel::EventDriven => {}
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    FaultDetected,
    TripCommand,
    RestoreCommand,
}

/// One scripted event; `source` is a device index resolved at scenario load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub time_s: f64,
    pub kind: FaultKind,
    pub source: usize,
    /// Number of GOOSE messages emitted at the event time.
    pub burst: usize,
}

/// Ordered self-healing choreography driving GOOSE bursts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultScript {
    pub events: Vec<FaultEvent>,
}

impl FaultScript {
    pub fn validate(&self) -> Result<(), Iec61850Error> {
        for pair in self.events.windows(2) {
            if pair[1].time_s < pair[0].time_s {
                return Err(Iec61850Error::Script(format!(
                    "events out of order at t={} then t={}",
                    pair[0].time_s, pair[1].time_s
                )));
            }
        }
        let trip = self
            .events
            .iter()
            .position(|e| e.kind == FaultKind::TripCommand);
        let restore = self
            .events
            .iter()
            .position(|e| e.kind == FaultKind::RestoreCommand);
        if let (Some(t), Some(r)) = (trip, restore) {
            if r < t {
                return Err(Iec61850Error::Script(
                    "restore command precedes trip command".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn total_burst(&self) -> usize {
        self.events.iter().map(|e| e.burst).sum()
    }
}

/// Emits the scripted GOOSE burst messages for events whose time falls in
/// [t0, t1). Burst messages carry GOOSE packet bits and the GOOSE deadline,
/// stamped at the event time.
pub fn apply_fault_script(
    script: &FaultScript,
    goose_profile: &SliceProfile,
    t0: f64,
    t1: f64,
    next_id: &mut u64,
) -> Vec<Message> {
    let mut out = Vec::new();
    for event in &script.events {
        if event.time_s >= t0 && event.time_s < t1 {
            for _ in 0..event.burst {
                out.push(Message::new(*next_id, goose_profile, event.source, event.time_s));
                *next_id += 1;
            }
        }
    }
    out
}
