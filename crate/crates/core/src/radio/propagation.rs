//! Path loss and shadowed channel realization.

use super::{RadioConfig, RadioError, Topology};
use crate::stream::{self, tag};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// PL(d) = A + B * log10(d_km), clamped below at 1 m. Monotone
/// nondecreasing in distance.
pub fn path_loss_db(distance_m: f64, a_db: f64, b_db: f64) -> Result<f64, RadioError> {
    if !(distance_m > 0.0) {
        return Err(RadioError::Config(format!(
            "nonpositive distance {distance_m} m"
        )));
    }
    let d_km = (distance_m.max(1.0)) / 1000.0;
    Ok(a_db + b_db * d_km.log10())
}

/// Linear power gains from every device to every cell for one coherence
/// epoch. A deterministic function of (seed, epoch, positions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMatrix {
    /// Device-major: gains[device * num_cells + cell]
    gains: Vec<f64>,
    num_cells: usize,
    pub epoch: u64,
}

impl ChannelMatrix {
    #[inline]
    pub fn gain(&self, device: usize, cell: usize) -> f64 {
        self.gains[device * self.num_cells + cell]
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }
}

/// gain = 10^(-(PL + shadow)/10), shadow ~ Normal(0, sigma^2) drawn from a
/// counter-keyed stream over (seed, epoch, device, cell). Gains clamp to
/// (0, 1].
pub fn realize_channel(
    topo: &Topology,
    cfg: &RadioConfig,
    seed: u64,
    epoch: u64,
) -> ChannelMatrix {
    let num_cells = topo.cells.len();
    let mut gains = vec![0.0; topo.nodes.len() * num_cells];
    for device in 0..topo.nodes.len() {
        for (cell_slot, &cell_node) in topo.cells.iter().enumerate() {
            if device == cell_node {
                gains[device * num_cells + cell_slot] = 1.0;
                continue;
            }
            let distance = topo.distance_m(device, cell_node).max(1.0);
            let pl = path_loss_db(distance, cfg.pathloss_a_db, cfg.pathloss_b_db)
                .expect("distance clamped above zero");
            let shadow = if cfg.shadowing_sigma_db > 0.0 {
                let mut rng = stream::substream(
                    seed,
                    &[tag::SHADOWING, epoch, device as u64, cell_slot as u64],
                );
                let z: f64 = rng.sample(StandardNormal);
                z * cfg.shadowing_sigma_db
            } else {
                0.0
            };
            let gain = 10f64.powf(-(pl + shadow) / 10.0);
            gains[device * num_cells + cell_slot] = gain.clamp(f64::MIN_POSITIVE, 1.0);
        }
    }
    ChannelMatrix {
        gains,
        num_cells,
        epoch,
    }
}
