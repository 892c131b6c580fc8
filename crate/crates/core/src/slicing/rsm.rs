//! RSM: SLA supervision and per-window violation accounting.

use crate::iec61850::{SliceId, SliceProfile};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::ops::Range;

/// Violation test: latency strictly above the slice's threshold violates;
/// equality does not. The +inf starvation sentinel always violates.
pub fn rsm_check(latency_s: f64, profile: &SliceProfile) -> bool {
    latency_s > profile.latency_sla_s
}

/// Windowed SLA record for one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaRecord {
    pub slice: SliceId,
    pub window: (u64, u64),
    pub samples: Vec<f64>,
    pub violations: u64,
}

impl SlaRecord {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / (self.samples.len().max(1)) as f64
    }
}

/// Per-slice rate over a window; `no_data` marks empty-sample slices,
/// which report rate 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceRate {
    pub samples: u64,
    pub violations: u64,
    pub rate: f64,
    pub no_data: bool,
}

/// Violations/samples per slice over a slot window, from flat
/// (slot, slice, violated) observations.
pub fn rsm_violation_rate(
    observations: &[(u64, SliceId, bool)],
    window: Range<u64>,
) -> BTreeMap<SliceId, SliceRate> {
    let mut out = BTreeMap::new();
    for slice in SliceId::ALL {
        let mut samples = 0u64;
        let mut violations = 0u64;
        for &(slot, s, violated) in observations {
            if s == slice && window.contains(&slot) {
                samples += 1;
                if violated {
                    violations += 1;
                }
            }
        }
        out.insert(
            slice,
            SliceRate {
                samples,
                violations,
                rate: violations as f64 / samples.max(1) as f64,
                no_data: samples == 0,
            },
        );
    }
    out
}

/// CSV rows (window_start, slice, samples, violations, rate) for evenly
/// split windows over [0, total_slots).
pub fn rsm_windows_csv(
    observations: &[(u64, SliceId, bool)],
    total_slots: u64,
    window_count: u64,
) -> String {
    let mut out = String::from("window_start,slice,samples,violations,rate\n");
    if window_count == 0 || total_slots == 0 {
        return out;
    }
    let width = total_slots.div_ceil(window_count);
    let mut start = 0u64;
    while start < total_slots {
        let end = (start + width).min(total_slots);
        let rates = rsm_violation_rate(observations, start..end);
        for slice in SliceId::ALL {
            let r = &rates[&slice];
            out.push_str(&format!(
                "{start},{slice},{},{},{}\n",
                r.samples, r.violations, r.rate
            ));
        }
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream;
    use rand::Rng;

    #[test]
    fn goose_over_threshold_violates() {
        let goose = SliceProfile::goose_default();
        assert!(rsm_check(0.4e-3, &goose));
    }

    #[test]
    fn mms_under_budget_passes() {
        let mms = SliceProfile::mms_default();
        assert!(!rsm_check(39e-3, &mms));
    }

    #[test]
    fn boundary_is_strict() {
        let goose = SliceProfile::goose_default();
        assert!(!rsm_check(0.3e-3, &goose));
        let sv = SliceProfile::sv_default();
        assert!(!rsm_check(0.5e-3, &sv));
        assert!(rsm_check(0.5e-3 + 1e-12, &sv));
    }

    #[test]
    fn infinity_always_violates() {
        for profile in [
            SliceProfile::goose_default(),
            SliceProfile::sv_default(),
            SliceProfile::mms_default(),
        ] {
            assert!(rsm_check(f64::INFINITY, &profile));
        }
    }

    #[test]
    fn rate_arithmetic() {
        let obs: Vec<(u64, SliceId, bool)> = (0..100)
            .map(|s| (s, SliceId::Sv, false))
            .collect();
        let rates = rsm_violation_rate(&obs, 0..100);
        assert_eq!(rates[&SliceId::Sv].rate, 0.0);
        assert!(!rates[&SliceId::Sv].no_data);

        let obs: Vec<(u64, SliceId, bool)> =
            (0..50).map(|s| (s, SliceId::Mms, s < 5)).collect();
        let rates = rsm_violation_rate(&obs, 0..50);
        assert!((rates[&SliceId::Mms].rate - 0.1).abs() < 1e-15);
        assert!(rates[&SliceId::Goose].no_data);
        assert_eq!(rates[&SliceId::Goose].rate, 0.0);
    }

    #[test]
    fn windowed_rates_match_recount_oracle() {
        // Synthetic log; oracle recounts by brute force per window.
        let mut rng = stream::substream(42, &[0xca]);
        let obs: Vec<(u64, SliceId, bool)> = (0..1000)
            .map(|_| {
                let slot = rng.random_range(0..200u64);
                let slice = SliceId::ALL[rng.random_range(0..3usize)];
                (slot, slice, rng.random::<f64>() < 0.25)
            })
            .collect();
        for window in [0..50u64, 50..100, 100..200] {
            let rates = rsm_violation_rate(&obs, window.clone());
            for slice in SliceId::ALL {
                let total = obs
                    .iter()
                    .filter(|(s, sl, _)| window.contains(s) && *sl == slice)
                    .count() as u64;
                let bad = obs
                    .iter()
                    .filter(|(s, sl, v)| window.contains(s) && *sl == slice && *v)
                    .count() as u64;
                assert_eq!(rates[&slice].samples, total);
                assert_eq!(rates[&slice].violations, bad);
                let expect = bad as f64 / total.max(1) as f64;
                assert!((rates[&slice].rate - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn csv_has_row_per_slice_per_window() {
        let obs = vec![(0, SliceId::Goose, true), (10, SliceId::Sv, false)];
        let csv = rsm_windows_csv(&obs, 20, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[0].starts_with("window_start"));
    }
}
