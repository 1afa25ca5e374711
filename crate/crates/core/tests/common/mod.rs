#![allow(dead_code)]

use std::collections::VecDeque;

use pcn_flow::{Amount, ChannelEdge, Demand, FlowNetwork, NodeId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Edmonds-Karp on a dense capacity matrix. Independent of the library's
/// pair representation.
pub fn edmonds_karp(n: usize, s: usize, t: usize, edges: &[(usize, usize, i64)]) -> i64 {
    let mut cap = vec![vec![0i64; n]; n];
    for &(u, v, c) in edges {
        cap[u][v] += c;
    }
    let mut total = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return total;
        }
        let mut bottleneck = i64::MAX;
        let mut v = t;
        while v != s {
            bottleneck = bottleneck.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
        total += bottleneck;
    }
}

pub fn oracle_max_flow_between(net: &FlowNetwork, s: NodeId, t: NodeId) -> Amount {
    let edges: Vec<(usize, usize, i64)> = net.edges().map(|e| (e.from.0, e.to.0, e.capacity.milli())).collect();
    Amount::from_milli(edmonds_karp(net.node_count(), s.0, t.0, &edges))
}

pub fn oracle_max_flow(net: &FlowNetwork) -> Amount {
    oracle_max_flow_between(net, net.source(), net.sink())
}

/// Digraph on `2..=max_nodes` nodes; each ordered pair is an edge with
/// probability `density` and integer capacity in `0..=max_cap` units.
pub fn random_network(rng: &mut ChaCha8Rng, max_nodes: usize, density: f64, max_cap: i64) -> FlowNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(density) {
                edges.push(ChannelEdge::new(u, v, Amount::from_units(rng.gen_range(0..=max_cap))));
            }
        }
    }
    let s = rng.gen_range(0..n);
    let t = (s + rng.gen_range(1..n)) % n;
    FlowNetwork::new(n, edges, NodeId(s), NodeId(t)).expect("generated network is valid")
}

pub fn seeded_network(seed: u64, max_nodes: usize, density: f64, max_cap: i64) -> FlowNetwork {
    random_network(&mut ChaCha8Rng::seed_from_u64(seed), max_nodes, density, max_cap)
}

/// Up to `max_k` demands with distinct endpoints and amounts in milli-units
/// up to `max_units`.
pub fn random_demands(rng: &mut ChaCha8Rng, n: usize, max_k: usize, max_units: i64) -> Vec<Demand> {
    let k = rng.gen_range(1..=max_k);
    (0..k)
        .map(|_| {
            let s = rng.gen_range(0..n);
            let t = (s + rng.gen_range(1..n)) % n;
            Demand::new(s, t, Amount::from_milli(rng.gen_range(0..=max_units * 1000)))
        })
        .collect()
}

/// A connected-ish network with channels in both directions, as payment
/// channel networks have.
pub fn random_channel_network(rng: &mut ChaCha8Rng, min_nodes: usize, max_nodes: usize, max_cap: i64) -> FlowNetwork {
    let n = rng.gen_range(min_nodes..=max_nodes);
    let mut edges = Vec::new();
    let link = |a: usize, b: usize, rng: &mut ChaCha8Rng, edges: &mut Vec<ChannelEdge>| {
        edges.push(ChannelEdge::new(a, b, Amount::from_milli(rng.gen_range(0..=max_cap * 1000))));
        edges.push(ChannelEdge::new(b, a, Amount::from_milli(rng.gen_range(0..=max_cap * 1000))));
    };
    let mut linked = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        linked.insert((u, v));
        link(u, v, rng, &mut edges);
    }
    for _ in 0..n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b && linked.insert((a.min(b), a.max(b))) {
            link(a.min(b), a.max(b), rng, &mut edges);
        }
    }
    FlowNetwork::new(n, edges, NodeId(0), NodeId(n - 1)).expect("generated network is valid")
}
