//! Network topology, flow pairs, paths and candidate-path enumeration.

mod paths;
mod topology;

pub use paths::{k_shortest_paths, shortest_path, CandidatePathSet, FlowPair, Path, PathId};
pub use topology::{
    build_topology, load_topology, parse_topology, Link, LinkId, LinkSpec, NodeId, Topology,
    TopologySpec,
};

/// All ordered pairs `(s, d)` with `s != d`.
pub fn all_pairs(topo: &Topology) -> Vec<FlowPair> {
    topo.nodes()
        .flat_map(|s| topo.nodes().map(move |d| (s, d)))
        .filter(|(s, d)| s != d)
        .map(|(src, dst)| FlowPair { src, dst })
        .collect()
}
