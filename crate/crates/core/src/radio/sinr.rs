//! SINR, spectral efficiency, throughput, and the latency formula.

use super::{ChannelMatrix, LinkAllocation, RadioConfig, RadioError, Topology};

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[inline]
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Thermal noise power over one RB, including the receiver noise figure.
pub fn noise_watts_per_rb(cfg: &RadioConfig) -> f64 {
    let noise_dbm = cfg.noise_spectral_density_dbm_hz
        + 10.0 * cfg.rb_bandwidth_hz.log10()
        + cfg.noise_figure_db;
    dbm_to_watts(noise_dbm)
}

/// Per-RB SINR for one link of a joint allocation.
///
/// For each RB the link holds: signal is its received power at its serving
/// cell; interference sums the received power of every other link assigned
/// the same RB, measured at this link's receiver. Returns (rb, linear sinr)
/// pairs; a link with an empty RB set yields an empty list (zero throughput
/// downstream, not an error).
pub fn sinr_per_rb(
    link_index: usize,
    allocations: &[LinkAllocation],
    topo: &Topology,
    channel: &ChannelMatrix,
    cfg: &RadioConfig,
) -> Result<Vec<(usize, f64)>, RadioError> {
    let link = allocations
        .get(link_index)
        .ok_or_else(|| RadioError::Allocation("link not present in allocation".into()))?;
    for &rb in &link.rbs {
        if rb >= cfg.num_rbs {
            return Err(RadioError::Allocation(format!(
                "RB index {rb} outside [0, {})",
                cfg.num_rbs
            )));
        }
    }
    let cell = topo.serving_cell_of(link.device);
    if cell == usize::MAX {
        return Err(RadioError::Allocation(format!(
            "device {} has no serving cell",
            topo.device_name(link.device)
        )));
    }
    let noise = noise_watts_per_rb(cfg);
    let own_gain = channel.gain(link.device, cell);
    let own_power = dbm_to_watts(link.tx_power_dbm);

    let mut out = Vec::with_capacity(link.rbs.len());
    for &rb in &link.rbs {
        let offset = cfg.rb_offset_linear(rb);
        let signal = own_power * own_gain * offset;
        let mut interference = 0.0;
        for (j, other) in allocations.iter().enumerate() {
            if j == link_index {
                continue;
            }
            if other.rbs.binary_search(&rb).is_ok() {
                interference +=
                    dbm_to_watts(other.tx_power_dbm) * channel.gain(other.device, cell) * offset;
            }
        }
        out.push((rb, signal / (noise * offset_noise(offset) + interference)));
    }
    Ok(out)
}

// The per-RB offset models a receiver-side frequency response, so it scales
// signal, interference and noise alike; SINR is then offset-free in noise
// but we keep the hook explicit for clarity.
#[inline]
fn offset_noise(_offset: f64) -> f64 {
    1.0
}

/// Shannon spectral efficiency with a configurable cap.
pub fn spectral_efficiency(sinr_linear: f64, cap_bps_hz: f64) -> Result<f64, RadioError> {
    if !(sinr_linear >= 0.0) {
        return Err(RadioError::Config(format!(
            "negative sinr {sinr_linear}"
        )));
    }
    Ok((1.0 + sinr_linear).log2().min(cap_bps_hz))
}

/// throughput = rb_bandwidth * sum of per-RB spectral efficiencies.
pub fn link_throughput(se_per_rb: &[f64], rb_bandwidth_hz: f64) -> f64 {
    rb_bandwidth_hz * se_per_rb.iter().sum::<f64>()
}

/// latency = bits/throughput + fixed delay; zero throughput yields the +inf
/// sentinel, which downstream SLA accounting records as a violation.
pub fn transmission_latency(packet_bits: f64, throughput_bps: f64, fixed_delay_s: f64) -> f64 {
    if throughput_bps <= 0.0 {
        return f64::INFINITY;
    }
    packet_bits / throughput_bps + fixed_delay_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iec61850::SliceId;
    use crate::radio::{realize_channel, DeviceKind, DeviceNode};

    fn symmetric_topology() -> Topology {
        // Two endpoints at mirrored positions around their own cells; the
        // geometry is fully symmetric between (a, g1) and (b, g2).
        let nodes = vec![
            DeviceNode {
                name: "g1".into(),
                kind: DeviceKind::GNodeB,
                position: [0.0, 0.0],
                serving_cell: None,
                max_tx_power_dbm: 30.0,
            },
            DeviceNode {
                name: "g2".into(),
                kind: DeviceKind::GNodeB,
                position: [500.0, 0.0],
                serving_cell: None,
                max_tx_power_dbm: 30.0,
            },
            DeviceNode {
                name: "a".into(),
                kind: DeviceKind::Ied,
                position: [100.0, 0.0],
                serving_cell: Some("g1".into()),
                max_tx_power_dbm: 23.0,
            },
            DeviceNode {
                name: "b".into(),
                kind: DeviceKind::Ied,
                position: [400.0, 0.0],
                serving_cell: Some("g2".into()),
                max_tx_power_dbm: 23.0,
            },
        ];
        Topology::build(nodes, (-10.0, 30.0)).unwrap()
    }

    fn no_shadowing() -> RadioConfig {
        RadioConfig {
            shadowing_sigma_db: 0.0,
            ..RadioConfig::default()
        }
    }

    #[test]
    fn single_link_interference_free() {
        let topo = symmetric_topology();
        let cfg = no_shadowing();
        let ch = realize_channel(&topo, &cfg, 1, 0);
        let allocs = vec![LinkAllocation::new(2, SliceId::Goose, vec![0, 1], 20.0)];
        let sinrs = sinr_per_rb(0, &allocs, &topo, &ch, &cfg).unwrap();
        let expected = dbm_to_watts(20.0) * ch.gain(2, 0) / noise_watts_per_rb(&cfg);
        for (_, s) in sinrs {
            assert!((s - expected).abs() / expected < 1e-12);
        }
    }

    #[test]
    fn symmetric_sharers_match_brute_force() {
        let topo = symmetric_topology();
        let cfg = no_shadowing();
        let ch = realize_channel(&topo, &cfg, 1, 0);
        let allocs = vec![
            LinkAllocation::new(2, SliceId::Sv, vec![3], 23.0),
            LinkAllocation::new(3, SliceId::Sv, vec![3], 23.0),
        ];
        let s0 = sinr_per_rb(0, &allocs, &topo, &ch, &cfg).unwrap()[0].1;
        let s1 = sinr_per_rb(1, &allocs, &topo, &ch, &cfg).unwrap()[0].1;
        assert!(
            (s0 - s1).abs() / s0 < 1e-12,
            "symmetric geometry must give equal SINRs: {s0} vs {s1}"
        );
        // Brute force: sum received power of every transmitter at receiver 0.
        let n = noise_watts_per_rb(&cfg);
        let p = dbm_to_watts(23.0);
        let expected = p * ch.gain(2, 0) / (n + p * ch.gain(3, 0));
        assert!((s0 - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn disjoint_rb_interferer_changes_nothing() {
        let topo = symmetric_topology();
        let cfg = no_shadowing();
        let ch = realize_channel(&topo, &cfg, 1, 0);
        let alone = vec![LinkAllocation::new(2, SliceId::Sv, vec![0], 23.0)];
        let with_orthogonal = vec![
            LinkAllocation::new(2, SliceId::Sv, vec![0], 23.0),
            LinkAllocation::new(3, SliceId::Sv, vec![7], 23.0),
        ];
        let a = sinr_per_rb(0, &alone, &topo, &ch, &cfg).unwrap()[0].1;
        let b = sinr_per_rb(0, &with_orthogonal, &topo, &ch, &cfg).unwrap()[0].1;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn se_known_points() {
        assert_eq!(spectral_efficiency(0.0, 9.6).unwrap(), 0.0);
        assert!((spectral_efficiency(1.0, 9.6).unwrap() - 1.0).abs() < 1e-15);
        assert!((spectral_efficiency(15.0, 9.6).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(spectral_efficiency(1e6, 9.6).unwrap(), 9.6);
        assert!(spectral_efficiency(-0.5, 9.6).is_err());
    }

    #[test]
    fn throughput_summation() {
        assert!((link_throughput(&[1.0], 180e3) - 180e3).abs() < 1e-9);
        assert_eq!(link_throughput(&[], 180e3), 0.0);
        let t = link_throughput(&[1.0, 2.0, 3.0], 180e3);
        assert!((t - 1.08e6).abs() < 1e-6, "oracle: 180k*(1+2+3) = 1.08M, got {t}");
    }

    #[test]
    fn latency_formula_points() {
        let l = transmission_latency(1000.0, 10e6, 0.0);
        assert!((l - 0.1e-3).abs() < 1e-15);
        assert!(transmission_latency(1000.0, 0.0, 0.0).is_infinite());
        // GOOSE packet at the SLA boundary: 1096 bits / 5.48 Mbit/s + 0.1 ms.
        let l = transmission_latency(1096.0, 5.48e6, 0.1e-3);
        assert!((l - 0.3e-3).abs() < 1e-9, "got {l}");
    }

    #[test]
    fn latency_invariant_under_packet_split() {
        // At constant throughput, two back-to-back halves finish at the
        // same time as the whole packet.
        let r = 2.5e6;
        let fixed = 0.05e-3;
        let whole = transmission_latency(2000.0, r, fixed);
        let half = transmission_latency(1000.0, r, 0.0);
        let split = half + transmission_latency(1000.0, r, fixed);
        assert!((whole - split).abs() < 1e-15);
    }
}
