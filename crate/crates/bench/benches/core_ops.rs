use criterion::{criterion_group, criterion_main, Criterion};
use gridslice_core::drl::gae_advantages;
use gridslice_core::nn::{Activation, DenseNet, LayerSpec, SumLoss};
use gridslice_core::radio::{realize_channel, sinr_per_rb, LinkAllocation};
use gridslice_core::{DeviceKind, DeviceNode, RadioConfig, SliceId, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn bench_topology() -> Topology {
    let mut nodes = vec![DeviceNode {
        name: "g1".into(),
        kind: DeviceKind::GNodeB,
        position: [0.0, 0.0],
        serving_cell: None,
        max_tx_power_dbm: 30.0,
    }];
    for i in 0..4 {
        nodes.push(DeviceNode {
            name: format!("d{i}"),
            kind: DeviceKind::Ied,
            position: [100.0 + 40.0 * i as f64, 60.0],
            serving_cell: Some("g1".into()),
            max_tx_power_dbm: 23.0,
        });
    }
    Topology::build(nodes, (-10.0, 30.0)).unwrap()
}

fn sinr_bench(c: &mut Criterion) {
    let topo = bench_topology();
    let cfg = RadioConfig::default();
    let channel = realize_channel(&topo, &cfg, 7, 0);
    let allocations: Vec<LinkAllocation> = (0..4)
        .map(|i| LinkAllocation::new(1 + i, SliceId::Sv, vec![i, i + 1, i + 2], 20.0))
        .collect();
    c.bench_function("sinr_4links_3rbs", |b| {
        b.iter(|| {
            for link in 0..4 {
                black_box(
                    sinr_per_rb(link, black_box(&allocations), &topo, &channel, &cfg).unwrap(),
                );
            }
        })
    });
}

fn forward_backward_bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let net = DenseNet::seeded(
        &[
            LayerSpec::new(62, 32, Activation::Relu),
            LayerSpec::new(32, 32, Activation::Relu),
            LayerSpec::new(32, 20, Activation::Linear),
        ],
        &mut rng,
    )
    .unwrap();
    let input: Vec<f64> = (0..62).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("net_forward", |b| {
        b.iter(|| black_box(net.forward(black_box(&input)).unwrap()))
    });
    c.bench_function("net_forward_backward", |b| {
        b.iter(|| {
            let (out, tape) = net.forward_recorded(black_box(&input)).unwrap();
            let grad = vec![1.0; out.len()];
            black_box(net.backward(&tape, &grad).unwrap())
        })
    });
    let _ = SumLoss;
}

fn gae_bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rewards: Vec<f64> = (0..1024).map(|_| rng.random_range(-1.0..1.0)).collect();
    let values: Vec<f64> = (0..1025).map(|_| rng.random_range(-1.0..1.0)).collect();
    c.bench_function("gae_1024", |b| {
        b.iter(|| black_box(gae_advantages(black_box(&rewards), &values, 0.95, 0.95).unwrap()))
    });
}

criterion_group!(benches, sinr_bench, forward_backward_bench, gae_bench);
criterion_main!(benches);
