//! Classical TE schemes and the hindsight robust-path heuristic.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{TrafficMatrix, TrafficTrace};
use crate::error::{Error, Result};
use crate::lp::{link_utilizations, max_utilization, solve_mcf, solve_robust_rates, RateAllocation};
use crate::netmodel::{CandidatePathSet, PathId, Topology};

/// A path counts as used when its rate exceeds this threshold.
pub const EPS_USE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Ecmp,
    Oblivious,
    MluOptimal,
    Hindsight,
    Drl,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Drl,
        Scheme::Hindsight,
        Scheme::MluOptimal,
        Scheme::Ecmp,
        Scheme::Oblivious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Ecmp => "ecmp",
            Scheme::Oblivious => "oblivious",
            Scheme::MluOptimal => "mlu-optimal",
            Scheme::Hindsight => "hindsight",
            Scheme::Drl => "drl",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

/// Per-interval outcome of one scheme over a run of consecutive intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: Scheme,
    /// Trace index of the first interval.
    pub start: usize,
    pub mlu: Vec<f64>,
    pub paths: Vec<BTreeSet<PathId>>,
    /// Churn against the previous interval; zero for the first one.
    pub churn: Vec<usize>,
}

impl SchemeResult {
    pub fn new(scheme: Scheme, start: usize, mlu: Vec<f64>, paths: Vec<BTreeSet<PathId>>) -> Self {
        let churn = std::iter::once(0)
            .chain(paths.windows(2).map(|w| measure_churn(&w[0], &w[1])))
            .take(paths.len())
            .collect();
        SchemeResult {
            scheme,
            start,
            mlu,
            paths,
            churn,
        }
    }

    pub fn mean_mlu(&self) -> f64 {
        self.mlu.iter().sum::<f64>() / self.mlu.len().max(1) as f64
    }

    /// CSV with columns `scheme,t,mlu,churn,n_paths`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scheme", "t", "mlu", "churn", "n_paths"])?;
        for (i, ((mlu, churn), paths)) in self.mlu.iter().zip(&self.churn).zip(&self.paths).enumerate() {
            w.write_record([
                self.scheme.as_str().to_owned(),
                (self.start + i).to_string(),
                mlu.to_string(),
                churn.to_string(),
                paths.len().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Size of the symmetric difference of two path-id sets.
pub fn measure_churn(a: &BTreeSet<PathId>, b: &BTreeSet<PathId>) -> usize {
    a.symmetric_difference(b).count()
}

/// Equal split over each pair's minimum-weight candidates.
#[derive(Debug, Clone)]
pub struct EcmpRouting {
    pub paths: CandidatePathSet,
    pub rates: Vec<Vec<f64>>,
}

impl EcmpRouting {
    pub fn new(cps: &CandidatePathSet) -> Result<Self> {
        let mut selected = Vec::new();
        for pi in 0..cps.pair_count() {
            let ps = cps.paths(pi);
            let best = ps
                .iter()
                .map(|p| p.weight)
                .min_by(f64::total_cmp)
                .ok_or_else(|| Error::Topology(format!("pair {pi} has no candidate path")))?;
            for (k, p) in ps.iter().enumerate() {
                if p.weight <= best * (1.0 + 1e-9) {
                    selected.push(cps.global_index(pi, k));
                }
            }
        }
        let paths = cps.restrict(&selected);
        let rates = (0..paths.pair_count())
            .map(|pi| {
                let m = paths.paths(pi).len();
                vec![1.0 / m as f64; m]
            })
            .collect();
        Ok(EcmpRouting { paths, rates })
    }

    pub fn utilizations(&self, topo: &Topology, dm: &TrafficMatrix) -> Vec<f64> {
        link_utilizations(topo, dm, &self.paths, &self.rates)
    }

    pub fn mlu(&self, topo: &Topology, dm: &TrafficMatrix) -> f64 {
        max_utilization(&self.utilizations(topo, dm))
    }

    pub fn path_ids(&self) -> BTreeSet<PathId> {
        self.paths.iter().map(|(_, _, p)| p.id).collect()
    }
}

/// ECMP over the candidate set for one demand matrix: `(routing, MLU)`.
pub fn ecmp_allocation(topo: &Topology, dm: &TrafficMatrix, cps: &CandidatePathSet) -> Result<(EcmpRouting, f64)> {
    let routing = EcmpRouting::new(cps)?;
    let mlu = routing.mlu(topo, dm);
    Ok((routing, mlu))
}

/// Per-interval MLU-optimal allocations, solved in parallel.
pub fn mlu_optimal_allocations(
    topo: &Topology,
    dms: &[TrafficMatrix],
    cps: &CandidatePathSet,
) -> Result<Vec<RateAllocation>> {
    dms.par_iter().map(|dm| solve_mcf(topo, dm, cps)).collect()
}

pub fn mlu_optimal_result(start: usize, allocs: &[RateAllocation]) -> SchemeResult {
    SchemeResult::new(
        Scheme::MluOptimal,
        start,
        allocs.iter().map(|a| a.objective).collect(),
        allocs.iter().map(|a| a.used_paths(0, EPS_USE)).collect(),
    )
}

/// Solves the MLU-optimal program for every interval of `trace`.
pub fn mlu_optimal_trace(topo: &Topology, trace: &TrafficTrace, cps: &CandidatePathSet) -> Result<SchemeResult> {
    let allocs = mlu_optimal_allocations(topo, &trace.matrices, cps)?;
    Ok(mlu_optimal_result(0, &allocs))
}

#[derive(Debug, Clone)]
pub struct HindsightResult {
    /// Global candidate indices of the chosen paths, ascending.
    pub selected: Vec<usize>,
    /// Paths added by the coverage guard beyond `r_size`.
    pub patched: usize,
    pub allocation: RateAllocation,
}

/// Picks the `r_size` paths used most often by the per-interval MLU-optimal
/// solutions of the window, then optimizes rates over them.
///
/// Ranking is by usage count, then routed volume, then path id. Pairs left
/// without a path get their shortest candidate, which may exceed `r_size`.
pub fn hindsight_robust_paths(
    topo: &Topology,
    dms: &[TrafficMatrix],
    cps: &CandidatePathSet,
    r_size: usize,
) -> Result<HindsightResult> {
    if dms.is_empty() {
        return Err(Error::Config("window must contain at least one interval".into()));
    }
    let n = cps.total_paths();
    let mut count = vec![0usize; n];
    let mut volume = vec![0.0f64; n];
    for dm in dms {
        let a = solve_mcf(topo, dm, cps)?;
        for (g, pi, _) in cps.iter() {
            let k = g - cps.global_index(pi, 0);
            let r = a.rates[0][pi][k];
            if r > EPS_USE {
                count[g] += 1;
            }
            volume[g] += r * dm.demand[pi];
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        count[b]
            .cmp(&count[a])
            .then(volume[b].total_cmp(&volume[a]))
            .then(cps.path_at(a).id.cmp(&cps.path_at(b).id))
    });
    let mut selected: Vec<usize> = order.into_iter().take(r_size).collect();
    let mut patched = 0;
    for (pi, first) in cps.shortest_indices().into_iter().enumerate() {
        let covered = selected.iter().any(|&g| cps.locate(g).0 == pi);
        if !covered {
            if let Some(g) = first {
                selected.push(g);
                patched += 1;
            }
        }
    }
    selected.sort_unstable();
    let allocation = solve_robust_rates(topo, dms, &cps.restrict(&selected))?;
    Ok(HindsightResult {
        selected,
        patched,
        allocation,
    })
}

/// Mean number of used paths per interval, rounded and floored at the
/// number of pairs.
pub fn calibrate_r_from(allocs: &[RateAllocation], pairs: usize) -> usize {
    if allocs.is_empty() {
        return pairs;
    }
    let mean = allocs
        .iter()
        .map(|a| a.used_paths(0, EPS_USE).len() as f64)
        .sum::<f64>()
        / allocs.len() as f64;
    (mean.round() as usize).max(pairs)
}

pub fn calibrate_r(topo: &Topology, trace: &TrafficTrace, cps: &CandidatePathSet) -> Result<usize> {
    if trace.is_empty() {
        return Err(Error::Trace("empty trace".into()));
    }
    let allocs = mlu_optimal_allocations(topo, &trace.matrices, cps)?;
    Ok(calibrate_r_from(&allocs, cps.pair_count()))
}

/// A fixed routing: rates aligned with a path set.
#[derive(Debug, Clone, Copy)]
pub struct Routing<'a> {
    pub paths: &'a CandidatePathSet,
    pub rates: &'a [Vec<f64>],
}

impl RateAllocation {
    pub fn routing(&self, i: usize) -> Routing<'_> {
        Routing {
            paths: &self.paths,
            rates: &self.rates[i],
        }
    }
}

/// Per-link utilization of `dm_new` under the stale routing minus its
/// utilization under the new routing.
pub fn stale_path_overutilization(
    topo: &Topology,
    dm_new: &TrafficMatrix,
    old: Routing<'_>,
    new: Routing<'_>,
) -> Vec<f64> {
    let stale = link_utilizations(topo, dm_new, old.paths, old.rates);
    let fresh = link_utilizations(topo, dm_new, new.paths, new.rates);
    stale.iter().zip(&fresh).map(|(a, b)| a - b).collect()
}

/// Usage statistics of the MLU-optimal solutions, keyed by path id.
pub fn usage_counts(allocs: &[RateAllocation]) -> HashMap<PathId, usize> {
    let mut m = HashMap::new();
    for a in allocs {
        for id in a.used_paths(0, EPS_USE) {
            *m.entry(id).or_insert(0) += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_topology, FlowPair, TopologySpec};

    fn diamond(cap_b: f64, cap_c: f64) -> (Topology, CandidatePathSet) {
        let t = build_topology(
            &TopologySpec::default()
                .link("A", "B", cap_b, 1.0)
                .link("A", "C", cap_c, 1.0)
                .link("B", "D", cap_b, 1.0)
                .link("C", "D", cap_c, 1.0),
        )
        .unwrap();
        let pair = FlowPair::new(t.node_id("A").unwrap(), t.node_id("D").unwrap()).unwrap();
        let cps = CandidatePathSet::k_shortest(&t, &[pair], 4).unwrap();
        (t, cps)
    }

    fn dm(t: usize, d: f64) -> TrafficMatrix {
        TrafficMatrix { t, demand: vec![d] }
    }

    fn ids(xs: &[u64]) -> BTreeSet<PathId> {
        xs.iter().map(|x| PathId(*x)).collect()
    }

    #[test]
    fn churn_is_symmetric_difference() {
        assert_eq!(measure_churn(&ids(&[1, 2]), &ids(&[1, 2])), 0);
        assert_eq!(measure_churn(&ids(&[1, 2]), &ids(&[2, 3])), 2);
    }

    #[test]
    fn ecmp_on_diamonds() {
        let (t, cps) = diamond(10.0, 10.0);
        let (r, mlu) = ecmp_allocation(&t, &dm(0, 8.0), &cps).unwrap();
        assert_eq!(r.rates, vec![vec![0.5, 0.5]]);
        assert!((mlu - 0.4).abs() < 1e-12);

        let (t, cps) = diamond(10.0, 30.0);
        let (_, mlu) = ecmp_allocation(&t, &dm(0, 8.0), &cps).unwrap();
        let opt = solve_mcf(&t, &dm(0, 8.0), &cps).unwrap().objective;
        assert!((mlu - 0.4).abs() < 1e-12);
        assert!((opt - 0.2).abs() < 1e-9);
    }

    #[test]
    fn ecmp_on_chain() {
        let t = build_topology(
            &TopologySpec::default()
                .link("A", "B", 10.0, 1.0)
                .link("B", "C", 4.0, 1.0),
        )
        .unwrap();
        let pair = FlowPair::new(t.node_id("A").unwrap(), t.node_id("C").unwrap()).unwrap();
        let cps = CandidatePathSet::k_shortest(&t, &[pair], 4).unwrap();
        let (r, mlu) = ecmp_allocation(&t, &dm(0, 2.0), &cps).unwrap();
        assert_eq!(r.rates, vec![vec![1.0]]);
        assert!((mlu - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_trace_has_no_churn() {
        let (t, cps) = diamond(10.0, 30.0);
        let trace = TrafficTrace::new(cps.pairs().to_vec(), (0..6).map(|i| dm(i, 8.0)).collect(), 300.0).unwrap();
        let r = mlu_optimal_trace(&t, &trace, &cps).unwrap();
        assert!(r.churn.iter().all(|c| *c == 0));
        assert_eq!(calibrate_r(&t, &trace, &cps).unwrap(), 2);
    }

    #[test]
    fn hindsight_keeps_both_branches() {
        let (t, cps) = diamond(10.0, 10.0);
        let h = hindsight_robust_paths(&t, &[dm(0, 8.0), dm(1, 4.0)], &cps, 2).unwrap();
        assert_eq!(h.selected, vec![0, 1]);
        assert_eq!(h.patched, 0);
        assert!((h.allocation.objective - 0.3).abs() < 1e-9);

        let h1 = hindsight_robust_paths(&t, &[dm(0, 8.0)], &cps, 1).unwrap();
        assert_eq!(h1.selected.len(), 1);
        assert!((h1.allocation.objective - 0.8).abs() < 1e-9);
    }

    #[test]
    fn stale_routing_difference() {
        let (t, cps) = diamond(10.0, 30.0);
        let a = solve_mcf(&t, &dm(0, 8.0), &cps).unwrap();
        let same = stale_path_overutilization(&t, &dm(1, 8.0), a.routing(0), a.routing(0));
        assert!(same.iter().all(|d| *d == 0.0));
        // old routing only used the B branch
        let old_rates = vec![vec![1.0, 0.0]];
        let old = Routing { paths: &cps, rates: &old_rates };
        let diff = stale_path_overutilization(&t, &dm(1, 8.0), old, a.routing(0));
        assert!(diff.iter().cloned().fold(f64::MIN, f64::max) > 0.0);
    }

    #[test]
    fn scheme_csv_header() {
        let r = SchemeResult::new(Scheme::Ecmp, 3, vec![0.5, 0.25], vec![ids(&[1]), ids(&[2])]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "scheme,t,mlu,churn,n_paths\necmp,3,0.5,0,1\necmp,4,0.25,2,1\n");
        assert_eq!("mlu-optimal".parse::<Scheme>().unwrap(), Scheme::MluOptimal);
    }
}
