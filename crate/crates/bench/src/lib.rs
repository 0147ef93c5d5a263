//! Shared fixtures for the solver benchmarks.

use std::path::Path;

use robustte::dataio::{synth_trace, SynthPattern, SynthSpec, TrafficTrace};
use robustte::netmodel::{all_pairs, load_topology, CandidatePathSet, Topology};

pub struct Fixture {
    pub topo: Topology,
    pub cps: CandidatePathSet,
    pub trace: TrafficTrace,
}

/// Abilene with `k` candidate paths per pair and a gravity trace that loads
/// the busiest link to roughly half its capacity.
pub fn abilene(k: usize, length: usize) -> Fixture {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/abilene.topo");
    let topo = load_topology(path).expect("bundled topology");
    let cps = CandidatePathSet::k_shortest(&topo, &all_pairs(&topo), k).expect("connected topology");
    let spec = SynthSpec {
        pattern: SynthPattern::Gravity,
        length,
        seed: 11,
        total_demand: topo.links().iter().map(|l| l.capacity).sum::<f64>() / 8.0,
        ..SynthSpec::default()
    };
    let trace = synth_trace(&topo, &spec).expect("valid synthetic spec");
    Fixture { topo, cps, trace }
}
