use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::topology::{LinkId, NodeId, Topology};
use crate::error::{Error, Result};

/// Ordered (source, destination) node pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowPair {
    pub src: NodeId,
    pub dst: NodeId,
}

impl FlowPair {
    pub fn new(src: NodeId, dst: NodeId) -> Result<Self> {
        if src == dst {
            return Err(Error::Trace(format!("flow pair with src == dst ({src})")));
        }
        Ok(FlowPair { src, dst })
    }

    pub fn label(&self, topo: &Topology) -> (String, String) {
        (
            topo.node_name(self.src).to_owned(),
            topo.node_name(self.dst).to_owned(),
        )
    }
}

/// Stable identifier of a path: FNV-1a hash of its link sequence, where each
/// link is named by its endpoint node names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathId(pub u64);

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl PathId {
    fn of(topo: &Topology, nodes: &[NodeId]) -> Self {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for hop in nodes.windows(2) {
            feed(topo.node_name(hop[0]).as_bytes());
            feed(b">");
            feed(topo.node_name(hop[1]).as_bytes());
            feed(b"|");
        }
        PathId(h)
    }
}

/// A loop-free directed walk from `pair.src` to `pair.dst`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub pair: FlowPair,
    pub id: PathId,
    pub nodes: Vec<NodeId>,
    pub links: Vec<LinkId>,
    pub weight: f64,
}

impl Path {
    /// Builds a path from a node sequence, checking contiguity and loop-freedom.
    pub fn from_nodes(topo: &Topology, nodes: Vec<NodeId>) -> Result<Path> {
        if nodes.len() < 2 {
            return Err(Error::Topology("path needs at least two nodes".into()));
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        if !nodes.iter().all(|n| seen.insert(*n)) {
            return Err(Error::Topology("path revisits a node".into()));
        }
        let mut links = Vec::with_capacity(nodes.len() - 1);
        let mut weight = 0.0;
        for hop in nodes.windows(2) {
            let l = topo.link_between(hop[0], hop[1]).ok_or_else(|| {
                Error::Topology(format!(
                    "no link {}->{}",
                    topo.node_name(hop[0]),
                    topo.node_name(hop[1])
                ))
            })?;
            weight += topo.link(l).weight;
            links.push(l);
        }
        let pair = FlowPair {
            src: nodes[0],
            dst: *nodes.last().unwrap(),
        };
        Ok(Path {
            pair,
            id: PathId::of(topo, &nodes),
            nodes,
            links,
            weight,
        })
    }

    pub fn contains_link(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }

    pub fn describe(&self, topo: &Topology) -> String {
        self.nodes
            .iter()
            .map(|n| topo.node_name(*n))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Total order used for all path rankings: weight, then node sequence.
fn rank(a: (f64, &[NodeId]), b: (f64, &[NodeId])) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

#[derive(Debug, Clone, PartialEq)]
struct Ranked {
    weight: f64,
    nodes: Vec<NodeId>,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        rank((self.weight, &self.nodes), (other.weight, &other.nodes))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra returning the minimal path under [`rank`] while avoiding the
/// blocked nodes and links. Labels carry the full node sequence, which keeps
/// the lexicographic tie-break exact.
fn ranked_dijkstra(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    blocked_nodes: &HashSet<NodeId>,
    blocked_links: &HashSet<LinkId>,
) -> Option<Ranked> {
    let mut best: Vec<Option<Ranked>> = vec![None; topo.node_count()];
    let mut done = vec![false; topo.node_count()];
    let mut heap = BinaryHeap::new();
    let start = Ranked {
        weight: 0.0,
        nodes: vec![src],
    };
    best[src.0] = Some(start.clone());
    heap.push(std::cmp::Reverse(start));
    while let Some(std::cmp::Reverse(label)) = heap.pop() {
        let u = *label.nodes.last().unwrap();
        if done[u.0] {
            continue;
        }
        done[u.0] = true;
        if u == dst {
            return Some(label);
        }
        for &lid in topo.out_links(u) {
            if blocked_links.contains(&lid) {
                continue;
            }
            let link = topo.link(lid);
            let v = link.dst;
            if done[v.0] || blocked_nodes.contains(&v) || label.nodes.contains(&v) {
                continue;
            }
            let mut nodes = label.nodes.clone();
            nodes.push(v);
            let cand = Ranked {
                weight: label.weight + link.weight,
                nodes,
            };
            if best[v.0].as_ref().is_none_or(|b| cand < *b) {
                best[v.0] = Some(cand.clone());
                heap.push(std::cmp::Reverse(cand));
            }
        }
    }
    None
}

/// Up to `k` loop-free paths for `pair`, ordered by total weight and then
/// lexicographically by node sequence (Yen's algorithm).
pub fn k_shortest_paths(topo: &Topology, pair: FlowPair, k: usize) -> Result<Vec<Path>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if pair.src.0 >= topo.node_count() || pair.dst.0 >= topo.node_count() || pair.src == pair.dst
    {
        return Err(Error::Topology(format!("invalid flow pair {pair:?}")));
    }
    let no_path = || {
        let (src, dst) = pair.label(topo);
        Error::NoPath { src, dst }
    };
    let first = ranked_dijkstra(topo, pair.src, pair.dst, &HashSet::new(), &HashSet::new())
        .ok_or_else(no_path)?;

    let mut accepted: Vec<Vec<NodeId>> = vec![first.nodes];
    let mut candidates: BTreeSet<Ranked> = BTreeSet::new();
    while accepted.len() < k {
        let prev = accepted.last().unwrap().clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut blocked_links = HashSet::new();
            for p in &accepted {
                if p.len() > i + 1 && p[..=i] == *root {
                    if let Some(l) = topo.link_between(p[i], p[i + 1]) {
                        blocked_links.insert(l);
                    }
                }
            }
            let blocked_nodes: HashSet<NodeId> = root[..i].iter().copied().collect();
            if let Some(spur_path) =
                ranked_dijkstra(topo, spur, pair.dst, &blocked_nodes, &blocked_links)
            {
                let mut nodes = root[..i].to_vec();
                nodes.extend_from_slice(&spur_path.nodes);
                if accepted.contains(&nodes) {
                    continue;
                }
                let weight = path_weight(topo, &nodes);
                candidates.insert(Ranked { weight, nodes });
            }
        }
        match candidates.pop_first() {
            Some(next) => accepted.push(next.nodes),
            None => break,
        }
    }
    accepted
        .into_iter()
        .map(|nodes| Path::from_nodes(topo, nodes))
        .collect()
}

fn path_weight(topo: &Topology, nodes: &[NodeId]) -> f64 {
    nodes
        .windows(2)
        .map(|h| topo.link(topo.link_between(h[0], h[1]).unwrap()).weight)
        .sum()
}

/// Minimum-weight path for `pair` (lexicographic tie-break).
pub fn shortest_path(topo: &Topology, pair: FlowPair) -> Result<Path> {
    Ok(k_shortest_paths(topo, pair, 1)?.remove(0))
}

/// Per-pair ordered candidate paths. Pairs are kept sorted; paths within a
/// pair are ordered by weight, then node sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePathSet {
    pairs: Vec<FlowPair>,
    paths: Vec<Vec<Path>>,
    offsets: Vec<usize>,
    pub k: usize,
    pub method: String,
}

impl CandidatePathSet {
    /// Enumerates `k` shortest paths for every pair.
    pub fn k_shortest(topo: &Topology, pairs: &[FlowPair], k: usize) -> Result<Self> {
        let mut sorted = pairs.to_vec();
        sorted.sort();
        sorted.dedup();
        let paths = sorted
            .iter()
            .map(|p| k_shortest_paths(topo, *p, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_parts(sorted, paths, k, "yen-ksp".into()))
    }

    /// Assembles a set from already-enumerated paths (may leave pairs empty).
    pub fn from_parts(pairs: Vec<FlowPair>, paths: Vec<Vec<Path>>, k: usize, method: String) -> Self {
        assert_eq!(pairs.len(), paths.len());
        let mut offsets = Vec::with_capacity(pairs.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for p in &paths {
            acc += p.len();
            offsets.push(acc);
        }
        CandidatePathSet {
            pairs,
            paths,
            offsets,
            k,
            method,
        }
    }

    pub fn pairs(&self) -> &[FlowPair] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn paths(&self, pair_idx: usize) -> &[Path] {
        &self.paths[pair_idx]
    }

    /// Total number of paths across all pairs.
    pub fn total_paths(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Global index of `(pair_idx, path_idx)`; pairs are laid out in order.
    pub fn global_index(&self, pair_idx: usize, path_idx: usize) -> usize {
        self.offsets[pair_idx] + path_idx
    }

    /// Inverse of [`global_index`](Self::global_index).
    pub fn locate(&self, global: usize) -> (usize, usize) {
        let pair = self.offsets.partition_point(|&o| o <= global) - 1;
        (pair, global - self.offsets[pair])
    }

    pub fn path_at(&self, global: usize) -> &Path {
        let (p, i) = self.locate(global);
        &self.paths[p][i]
    }

    /// Iterates `(global index, pair index, path)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Path)> + '_ {
        self.paths.iter().enumerate().flat_map(move |(pi, ps)| {
            ps.iter()
                .enumerate()
                .map(move |(i, p)| (self.offsets[pi] + i, pi, p))
        })
    }

    pub fn pair_index(&self, pair: FlowPair) -> Option<usize> {
        self.pairs.binary_search(&pair).ok()
    }

    /// Restricts the set to the given global indices, preserving order.
    pub fn restrict(&self, selected: &[usize]) -> CandidatePathSet {
        let mut keep = vec![false; self.total_paths()];
        for &g in selected {
            keep[g] = true;
        }
        let paths = self
            .paths
            .iter()
            .enumerate()
            .map(|(pi, ps)| {
                ps.iter()
                    .enumerate()
                    .filter(|(i, _)| keep[self.offsets[pi] + i])
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        Self::from_parts(self.pairs.clone(), paths, self.k, format!("{}/subset", self.method))
    }

    /// Global indices of the first path of each pair with at least one path.
    pub fn shortest_indices(&self) -> Vec<Option<usize>> {
        (0..self.pair_count())
            .map(|pi| (!self.paths[pi].is_empty()).then(|| self.offsets[pi]))
            .collect()
    }

    /// Checks the structural invariants: every pair has a path, ids are
    /// unique within a pair and paths are ranked.
    pub fn validate(&self) -> Result<()> {
        for (pi, ps) in self.paths.iter().enumerate() {
            if ps.is_empty() {
                return Err(Error::Topology(format!("pair {pi} has no candidate path")));
            }
            let mut ids = HashSet::new();
            for p in ps {
                if p.pair != self.pairs[pi] || !ids.insert(p.id) {
                    return Err(Error::Topology(format!("pair {pi} has inconsistent paths")));
                }
            }
            for w in ps.windows(2) {
                if rank((w[0].weight, &w[0].nodes), (w[1].weight, &w[1].nodes)) == Ordering::Greater
                {
                    return Err(Error::Topology(format!("pair {pi} paths are not ranked")));
                }
            }
        }
        Ok(())
    }
}
