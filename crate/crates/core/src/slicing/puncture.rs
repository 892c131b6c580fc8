//! Traffic puncturing: urgent time-sensitive messages preempt resources
//! held by lower-priority slices.

use super::SlicePartition;
use crate::iec61850::SliceId;
use crate::radio::LinkAllocation;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PunctureEvent {
    pub urgent_device: usize,
    pub urgent_slice: SliceId,
    pub victim_device: usize,
    pub victim_slice: SliceId,
    pub rbs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PunctureOutcome {
    pub schedule: Vec<LinkAllocation>,
    pub events: Vec<PunctureEvent>,
    /// Urgent links whose demand could not be met because nothing was
    /// preemptible.
    pub starved: Vec<(usize, SliceId)>,
}

/// Reassigns RBs held by lower-priority slices to urgent links until each
/// urgent link holds at least `demand` RBs, or nothing preemptible remains.
///
/// Only RBs inside the urgent slice's admissible pool can move, so the
/// punctured schedule still respects the RIL partition. Victims are taken
/// lowest-priority-first; within a slice, the fullest grant loses RBs first
/// (from the top of its RB range), deterministically. Preempted traffic
/// stays queued and is simply served later.
pub fn puncture(
    schedule: &[LinkAllocation],
    urgent: &[(usize, SliceId)],
    demand: usize,
    partition: &SlicePartition,
) -> PunctureOutcome {
    let mut schedule: Vec<LinkAllocation> = schedule.to_vec();
    let mut events = Vec::new();
    let mut starved = Vec::new();

    let mut urgent_sorted = urgent.to_vec();
    urgent_sorted.sort_by_key(|&(device, slice)| (slice.priority(), device));

    for (device, slice) in urgent_sorted {
        let admissible = &partition.admissible[&slice];
        let urgent_priority = slice.priority();
        // Urgent links are expected to appear in the schedule (their grant
        // may be empty); one without any entry can only starve.
        let Some(current) = schedule
            .iter()
            .position(|a| a.device == device && a.slice == slice)
        else {
            starved.push((device, slice));
            continue;
        };
        let have = schedule[current].rbs.len();
        if have >= demand {
            continue;
        }
        let mut need = demand - have;

        // Candidate victims: strictly lower priority, holding admissible
        // RBs; lowest priority first, then largest grant, then device index.
        let mut victims: Vec<usize> = (0..schedule.len())
            .filter(|&i| schedule[i].slice.priority() > urgent_priority)
            .filter(|&i| {
                schedule[i]
                    .rbs
                    .iter()
                    .any(|rb| admissible.binary_search(rb).is_ok())
            })
            .collect();
        victims.sort_by(|&a, &b| {
            let ka = (
                std::cmp::Reverse(schedule[a].slice.priority()),
                std::cmp::Reverse(schedule[a].rbs.len()),
                schedule[a].device,
            );
            let kb = (
                std::cmp::Reverse(schedule[b].slice.priority()),
                std::cmp::Reverse(schedule[b].rbs.len()),
                schedule[b].device,
            );
            ka.cmp(&kb)
        });

        for victim_idx in victims {
            if need == 0 {
                break;
            }
            let (victim_device, victim_slice) =
                (schedule[victim_idx].device, schedule[victim_idx].slice);
            // Take from the top of the victim's RB range.
            let taken: Vec<usize> = schedule[victim_idx]
                .rbs
                .iter()
                .copied()
                .filter(|rb| admissible.binary_search(rb).is_ok())
                .rev()
                .take(need)
                .collect();
            if taken.is_empty() {
                continue;
            }
            schedule[victim_idx].rbs.retain(|r| !taken.contains(r));
            need -= taken.len();
            let mut moved = taken.clone();
            moved.sort_unstable();
            events.push(PunctureEvent {
                urgent_device: device,
                urgent_slice: slice,
                victim_device,
                victim_slice,
                rbs: moved,
            });
            let entry = &mut schedule[current];
            entry.rbs.extend(taken);
            entry.rbs.sort_unstable();
            entry.rbs.dedup();
        }

        if need > 0 {
            starved.push((device, slice));
        }
    }

    schedule.retain(|a| !a.rbs.is_empty());
    PunctureOutcome {
        schedule,
        events,
        starved,
    }
}
