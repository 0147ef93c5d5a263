//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustte::dataio::TrafficMatrix;
use robustte::netmodel::{build_topology, CandidatePathSet, FlowPair, NodeId, Topology, TopologySpec};

pub struct Instance {
    pub topo: Topology,
    pub cps: CandidatePathSet,
    pub dms: Vec<TrafficMatrix>,
}

/// A bidirectional ring over `n` nodes plus a few random one-way chords.
pub fn random_topology(rng: &mut ChaCha8Rng, n: usize, chords: usize) -> Topology {
    let mut spec = TopologySpec::default();
    let mut seen = std::collections::BTreeSet::new();
    let mut add = |spec: TopologySpec, a: usize, b: usize, rng: &mut ChaCha8Rng| {
        if a == b || !seen.insert((a, b)) {
            return spec;
        }
        let cap = rng.gen_range(5.0..20.0);
        let w = rng.gen_range(1..=3) as f64;
        spec.link(&a.to_string(), &b.to_string(), cap, w)
    };
    for i in 0..n {
        let j = (i + 1) % n;
        spec = add(spec, i, j, rng);
        spec = add(spec, j, i, rng);
    }
    for _ in 0..chords {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        spec = add(spec, a, b, rng);
    }
    build_topology(&spec).expect("valid random topology")
}

pub fn random_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<FlowPair> {
    let mut all: Vec<FlowPair> = (0..n)
        .flat_map(|s| (0..n).filter(move |&d| d != s).map(move |d| (s, d)))
        .map(|(s, d)| FlowPair::new(NodeId(s), NodeId(d)).unwrap())
        .collect();
    all.shuffle(rng);
    all.truncate(count);
    all.sort();
    all
}

pub fn random_matrices(rng: &mut ChaCha8Rng, pairs: usize, w: usize) -> Vec<TrafficMatrix> {
    (0..w)
        .map(|t| TrafficMatrix {
            t,
            demand: (0..pairs).map(|_| rng.gen_range(1.0..10.0)).collect(),
        })
        .collect()
}

pub fn random_instance(seed: u64, n: usize, pairs: usize, k: usize, w: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = random_topology(&mut rng, n, n);
    let pairs = random_pairs(&mut rng, n, pairs);
    let cps = CandidatePathSet::k_shortest(&topo, &pairs, k).unwrap();
    let dms = random_matrices(&mut rng, pairs.len(), w);
    Instance { topo, cps, dms }
}

/// Every simple path from `src` to `dst` as (weight, node sequence).
pub fn all_simple_paths(topo: &Topology, src: NodeId, dst: NodeId) -> Vec<(f64, Vec<NodeId>)> {
    fn walk(topo: &Topology, at: NodeId, dst: NodeId, stack: &mut Vec<NodeId>, w: f64, out: &mut Vec<(f64, Vec<NodeId>)>) {
        if at == dst {
            out.push((w, stack.clone()));
            return;
        }
        for l in topo.links() {
            if l.src == at && !stack.contains(&l.dst) {
                stack.push(l.dst);
                walk(topo, l.dst, dst, stack, w + l.weight, out);
                stack.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(topo, src, dst, &mut vec![src], 0.0, &mut out);
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    out
}

/// Link loads divided by capacity for per-pair split vectors.
pub fn utilization(topo: &Topology, cps: &CandidatePathSet, dm: &TrafficMatrix, rates: &[Vec<f64>]) -> Vec<f64> {
    let mut load = vec![0.0; topo.link_count()];
    for pi in 0..cps.pair_count() {
        for (k, p) in cps.paths(pi).iter().enumerate() {
            for l in &p.links {
                load[l.0] += rates[pi][k] * dm.demand[pi];
            }
        }
    }
    load.iter().zip(topo.links()).map(|(x, l)| x / l.capacity).collect()
}

pub fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// Grid points of the probability simplex of dimension `k` at step `1/steps`.
fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    match k {
        1 => vec![vec![1.0]],
        2 => (0..=steps).map(|i| vec![i as f64 / steps as f64, 1.0 - i as f64 / steps as f64]).collect(),
        _ => panic!("grid oracle supports at most two paths per pair"),
    }
}

/// Minimum MLU over a grid of split ratios (step 1e-3) for instances with at
/// most two pairs and two paths per pair.
pub fn grid_search_mlu(topo: &Topology, cps: &CandidatePathSet, dm: &TrafficMatrix) -> f64 {
    assert!(cps.pair_count() <= 2);
    let grids: Vec<Vec<Vec<f64>>> = (0..cps.pair_count())
        .map(|pi| simplex_grid(cps.paths(pi).len(), 1000))
        .collect();
    let mut best = f64::INFINITY;
    match grids.len() {
        1 => {
            for a in &grids[0] {
                best = best.min(max_of(&utilization(topo, cps, dm, std::slice::from_ref(a))));
            }
        }
        2 => {
            // Loads are linear in each pair's split, so precompute per-pair
            // link loads and combine.
            let loads = |pi: usize, r: &Vec<f64>| {
                let mut load = vec![0.0; topo.link_count()];
                for (k, p) in cps.paths(pi).iter().enumerate() {
                    for l in &p.links {
                        load[l.0] += r[k] * dm.demand[pi];
                    }
                }
                load
            };
            let l0: Vec<Vec<f64>> = grids[0].iter().map(|r| loads(0, r)).collect();
            let l1: Vec<Vec<f64>> = grids[1].iter().map(|r| loads(1, r)).collect();
            let caps: Vec<f64> = topo.links().iter().map(|l| l.capacity).collect();
            for a in &l0 {
                for b in &l1 {
                    let mut m: f64 = 0.0;
                    for e in 0..caps.len() {
                        m = m.max((a[e] + b[e]) / caps[e]);
                    }
                    best = best.min(m);
                }
            }
        }
        _ => unreachable!(),
    }
    best
}
