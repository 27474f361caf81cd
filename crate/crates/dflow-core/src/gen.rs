//! Seeded instance generation: named example topologies and random networks,
//! packet-type sets, and tiny instances for oracle work.

use crate::net::{build_self_loop_view, NetworkSpec, NodeId, PacketTypeSpec, SelfLoopView};
use crate::traffic::ArrivalProcess;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The 4-node example network: a directed cycle u -> a -> v -> b -> u with
/// unit capacities. The type (s=u, z=v, d=2) has exactly three
/// route-schedules here.
pub fn example_cycle_network() -> NetworkSpec {
    NetworkSpec::new(
        vec!["u".into(), "a".into(), "v".into(), "b".into()],
        vec![
            ("u".into(), "a".into(), 1),
            ("a".into(), "v".into(), 1),
            ("v".into(), "b".into(), 1),
            ("b".into(), "u".into(), 1),
        ],
    )
    .expect("static network")
}

/// An 8-node stand-in topology for the synthetic sweeps: a ring with two
/// chords, every link at capacity `cap`.
pub fn eight_node_network(cap: u32) -> NetworkSpec {
    let mut links = Vec::new();
    for i in 0..8usize {
        links.push((i, (i + 1) % 8, cap));
        links.push(((i + 1) % 8, i, cap));
    }
    for &(a, b) in &[(0usize, 4usize), (2usize, 6usize)] {
        links.push((a, b, cap));
        links.push((b, a, cap));
    }
    NetworkSpec::with_indexed_nodes(8, links).expect("static network")
}

/// Settings for seeded random instances.
#[derive(Debug, Clone)]
pub struct RandomInstanceSpec {
    pub nodes: std::ops::RangeInclusive<usize>,
    pub extra_links: std::ops::RangeInclusive<usize>,
    pub capacity: std::ops::RangeInclusive<u32>,
    pub types: std::ops::RangeInclusive<usize>,
    pub deadline: std::ops::RangeInclusive<u32>,
    pub rate: std::ops::Range<f64>,
    pub weight: std::ops::Range<f64>,
}

impl Default for RandomInstanceSpec {
    fn default() -> Self {
        RandomInstanceSpec {
            nodes: 3..=10,
            extra_links: 0..=8,
            capacity: 1..=10,
            types: 1..=5,
            deadline: 0..=6,
            rate: 0.05..1.5,
            weight: 0.05..1.0,
        }
    }
}

/// A random strongly-reachable network plus Bernoulli-style packet types.
/// The graph is a directed ring (so every pair is connected) with extra
/// random chords.
pub fn random_instance(
    spec: &RandomInstanceSpec,
    seed: u64,
) -> (SelfLoopView, Vec<PacketTypeSpec>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(spec.nodes.clone()).max(2);
    let mut links: Vec<(usize, usize, u32)> = Vec::new();
    for i in 0..n {
        links.push((i, (i + 1) % n, rng.gen_range(spec.capacity.clone())));
    }
    let extra = rng.gen_range(spec.extra_links.clone());
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && !links.iter().any(|&(t, h, _)| t == a && h == b) {
            links.push((a, b, rng.gen_range(spec.capacity.clone())));
        }
    }
    let net = NetworkSpec::with_indexed_nodes(n, links).expect("generated network is valid");
    let view = build_self_loop_view(net);
    let count = rng.gen_range(spec.types.clone());
    let mut types = Vec::with_capacity(count);
    let mut rates = Vec::with_capacity(count);
    for _ in 0..count {
        let s = rng.gen_range(0..n);
        let mut z = rng.gen_range(0..n);
        while z == s {
            z = rng.gen_range(0..n);
        }
        let rate = rng.gen_range(spec.rate.clone());
        types.push(
            PacketTypeSpec::new(
                NodeId(s),
                NodeId(z),
                rng.gen_range(spec.deadline.clone()),
                rng.gen_range(spec.weight.clone()),
                ArrivalProcess::Bernoulli { rate: rate.min(1.0) },
            )
            .expect("s != z"),
        );
        rates.push(rate.min(1.0));
    }
    (view, types, rates)
}

/// Random packet types over a fixed network, rates supplied by `make_proc`.
pub fn random_types_on(
    view: &SelfLoopView,
    count: usize,
    deadline: u32,
    rate_range: std::ops::Range<f64>,
    seed: u64,
    make_proc: impl Fn(f64) -> ArrivalProcess,
) -> (Vec<PacketTypeSpec>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = view.node_count();
    let mut types = Vec::with_capacity(count);
    let mut rates = Vec::with_capacity(count);
    for _ in 0..count {
        let s = rng.gen_range(0..n);
        let mut z = rng.gen_range(0..n);
        while z == s {
            z = rng.gen_range(0..n);
        }
        let rate = rng.gen_range(rate_range.clone());
        let weight: f64 = rng.gen_range(0.0..1.0);
        types.push(
            PacketTypeSpec::new(NodeId(s), NodeId(z), deadline, weight, make_proc(rate))
                .expect("s != z"),
        );
        rates.push(rate);
    }
    (types, rates)
}
