//! Path-based traffic-engineering programs built on the simplex solver.

use std::collections::BTreeSet;

use super::problem::{LpProblem, LpStatus, Sense, VarId};
use crate::dataio::TrafficMatrix;
use crate::error::{Error, Result};
use crate::netmodel::{CandidatePathSet, PathId, Topology};

/// Tolerance for the per-pair rate sum and for the reported MLU.
pub const REPORT_TOL: f64 = 1e-6;
/// Rates down to this negative value are treated as solver noise and clamped.
pub const NEGATIVE_RATE_TOL: f64 = 1e-9;
/// Largest candidate universe the exhaustive oracle accepts.
pub const BRUTE_FORCE_PATH_LIMIT: usize = 20;

const INF: f64 = f64::INFINITY;

/// Split ratios over a fixed path set for a window of intervals.
#[derive(Debug, Clone)]
pub struct RateAllocation {
    pub start: usize,
    pub window: usize,
    /// Allowed paths; rates below are aligned with this set.
    pub paths: CandidatePathSet,
    /// `rates[interval][pair][path]`.
    pub rates: Vec<Vec<Vec<f64>>>,
    /// Maximum link utilization per interval.
    pub mlu: Vec<f64>,
    /// Mean of `mlu`.
    pub objective: f64,
}

impl RateAllocation {
    /// Ids of paths carrying a rate above `eps` in interval `i` of the window.
    pub fn used_paths(&self, i: usize, eps: f64) -> BTreeSet<PathId> {
        self.rates[i]
            .iter()
            .enumerate()
            .flat_map(|(pi, rs)| {
                rs.iter()
                    .zip(self.paths.paths(pi))
                    .filter(|(r, _)| **r > eps)
                    .map(|(_, p)| p.id)
            })
            .collect()
    }

    /// Ids of every allowed path.
    pub fn path_ids(&self) -> BTreeSet<PathId> {
        self.paths.iter().map(|(_, _, p)| p.id).collect()
    }

    /// Re-checks the allocation invariants against the demands it serves.
    pub fn validate(&self, topo: &Topology, dms: &[TrafficMatrix]) -> Result<()> {
        if dms.len() != self.window || self.rates.len() != self.window || self.mlu.len() != self.window {
            return Err(Error::Invariant("window length mismatch".into()));
        }
        for (i, (rates, dm)) in self.rates.iter().zip(dms).enumerate() {
            for (pi, rs) in rates.iter().enumerate() {
                let sum: f64 = rs.iter().sum();
                if (sum - 1.0).abs() > REPORT_TOL {
                    return Err(Error::Invariant(format!(
                        "interval {i}, pair {pi}: rates sum to {sum}"
                    )));
                }
                if rs.iter().any(|r| *r < 0.0) {
                    return Err(Error::Invariant(format!("interval {i}, pair {pi}: negative rate")));
                }
            }
            let z = max_utilization(&link_utilizations(topo, dm, &self.paths, rates));
            if (z - self.mlu[i]).abs() > REPORT_TOL * z.max(1.0) {
                return Err(Error::Invariant(format!(
                    "interval {i}: reported MLU {} differs from {z}",
                    self.mlu[i]
                )));
            }
        }
        let mean = self.mlu.iter().sum::<f64>() / self.window as f64;
        if (mean - self.objective).abs() > REPORT_TOL * mean.max(1.0) {
            return Err(Error::Invariant("objective is not the mean MLU".into()));
        }
        Ok(())
    }
}

/// Per-link utilization of `dm` routed over `paths` with `rates[pair][path]`.
pub fn link_utilizations(
    topo: &Topology,
    dm: &TrafficMatrix,
    paths: &CandidatePathSet,
    rates: &[Vec<f64>],
) -> Vec<f64> {
    let mut load = vec![0.0; topo.link_count()];
    for (pi, rs) in rates.iter().enumerate() {
        let d = dm.demand[pi];
        if d == 0.0 {
            continue;
        }
        for (r, p) in rs.iter().zip(paths.paths(pi)) {
            if *r == 0.0 {
                continue;
            }
            for l in &p.links {
                load[l.0] += r * d;
            }
        }
    }
    load.iter()
        .zip(topo.links())
        .map(|(x, l)| x / l.capacity)
        .collect()
}

pub fn max_utilization(utils: &[f64]) -> f64 {
    utils.iter().copied().fold(0.0, f64::max)
}

fn check_alignment(dm: &TrafficMatrix, paths: &CandidatePathSet) -> Result<()> {
    if dm.demand.len() != paths.pair_count() {
        return Err(Error::Shape(format!(
            "demand matrix has {} pairs, path set has {}",
            dm.demand.len(),
            paths.pair_count()
        )));
    }
    Ok(())
}

fn uncovered(topo: &Topology, paths: &CandidatePathSet, pi: usize) -> Error {
    let (src, dst) = paths.pairs()[pi].label(topo);
    Error::UncoveredPair { src, dst }
}

/// Rates for a pair without demand: everything on its first allowed path.
fn default_rates(n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    if n > 0 {
        r[0] = 1.0;
    }
    r
}

/// Variables of one interval's MLU program.
struct IntervalVars {
    rates: Vec<Vec<Option<VarId>>>,
    z: VarId,
}

/// Adds one interval's rate variables, rate-sum rows and link rows to `lp`.
/// Link coefficients are `demand / (capacity * scale)`, so the `Z` variable
/// carries `MLU / scale`.
fn add_interval(
    lp: &mut LpProblem,
    topo: &Topology,
    dm: &TrafficMatrix,
    paths: &CandidatePathSet,
    tag: &str,
    z_cost: f64,
    scale: f64,
) -> IntervalVars {
    let z = lp.add_var(format!("Z{tag}"), 0.0, INF, z_cost);
    let mut link_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); topo.link_count()];
    let rates = (0..paths.pair_count())
        .map(|pi| {
            let d = dm.demand[pi];
            if d <= 0.0 {
                return vec![None; paths.paths(pi).len()];
            }
            let vars: Vec<Option<VarId>> = paths
                .paths(pi)
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let v = lp.add_var(format!("r{tag}_{pi}_{k}"), 0.0, INF, 0.0);
                    for l in &p.links {
                        link_terms[l.0].push((v, d / (topo.link(*l).capacity * scale)));
                    }
                    Some(v)
                })
                .collect();
            lp.add_row(
                format!("sum{tag}_{pi}"),
                vars.iter().map(|v| (v.unwrap(), 1.0)),
                Sense::Eq,
                1.0,
            );
            vars
        })
        .collect();
    for (e, mut terms) in link_terms.into_iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        terms.push((z, -1.0));
        lp.add_row(format!("link{tag}_{e}"), terms, Sense::Le, 0.0);
    }
    IntervalVars { rates, z }
}

/// Largest single-path link coefficient `demand / capacity` of an interval.
fn coefficient_scale(topo: &Topology, dm: &TrafficMatrix, paths: &CandidatePathSet) -> f64 {
    let mut s: f64 = 0.0;
    for pi in 0..paths.pair_count() {
        let d = dm.demand[pi];
        if d <= 0.0 {
            continue;
        }
        for p in paths.paths(pi) {
            for l in &p.links {
                s = s.max(d / topo.link(*l).capacity);
            }
        }
    }
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn check_coverage(topo: &Topology, dms: &[TrafficMatrix], paths: &CandidatePathSet) -> Result<()> {
    for dm in dms {
        check_alignment(dm, paths)?;
    }
    match (0..paths.pair_count()).find(|&pi| paths.paths(pi).is_empty()) {
        Some(pi) => Err(uncovered(topo, paths, pi)),
        None => Ok(()),
    }
}

/// Solves the MLU program of one interval over `paths`. Returns the rates and
/// the LP's own `Z` (unscaled) for cross-checking.
fn solve_interval(
    topo: &Topology,
    dm: &TrafficMatrix,
    paths: &CandidatePathSet,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let scale = coefficient_scale(topo, dm, paths);
    let mut lp = LpProblem::new(format!("mlu_t{}", dm.t));
    let vars = add_interval(&mut lp, topo, dm, paths, "", 1.0, scale);
    let sol = lp.solve();
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let mut rates = Vec::with_capacity(paths.pair_count());
    for (pi, vs) in vars.rates.iter().enumerate() {
        if vs.iter().all(Option::is_none) {
            rates.push(default_rates(vs.len()));
            continue;
        }
        let mut rs = Vec::with_capacity(vs.len());
        for v in vs {
            let r = sol.value(v.unwrap());
            if r < -NEGATIVE_RATE_TOL {
                return Err(Error::Invariant(format!("pair {pi}: rate {r} below zero")));
            }
            rs.push(r.max(0.0));
        }
        rates.push(rs);
    }
    Ok((rates, sol.value(vars.z) * scale))
}

fn assemble(
    topo: &Topology,
    start: usize,
    dms: &[TrafficMatrix],
    paths: &CandidatePathSet,
    solved: Vec<(Vec<Vec<f64>>, f64)>,
) -> Result<RateAllocation> {
    let mut rates = Vec::with_capacity(solved.len());
    let mut mlu = Vec::with_capacity(solved.len());
    for ((rs, lp_z), dm) in solved.into_iter().zip(dms) {
        let z = max_utilization(&link_utilizations(topo, dm, paths, &rs));
        if z > lp_z + REPORT_TOL * lp_z.max(1.0) {
            return Err(Error::Invariant(format!(
                "interval {}: routed MLU {z} exceeds LP bound {lp_z}",
                dm.t
            )));
        }
        rates.push(rs);
        mlu.push(z);
    }
    let objective = mlu.iter().sum::<f64>() / mlu.len() as f64;
    let alloc = RateAllocation {
        start,
        window: dms.len(),
        paths: paths.clone(),
        rates,
        mlu,
        objective,
    };
    alloc.validate(topo, dms)?;
    Ok(alloc)
}

/// MLU-optimal split of a single demand matrix over the candidate paths.
pub fn solve_mcf(topo: &Topology, dm: &TrafficMatrix, cps: &CandidatePathSet) -> Result<RateAllocation> {
    let dms = std::slice::from_ref(dm);
    check_coverage(topo, dms, cps)?;
    let solved = solve_interval(topo, dm, cps)?;
    assemble(topo, dm.t, dms, cps, vec![solved])
}

/// Minimizes the mean MLU over the window with the path set held fixed.
///
/// The program has no variables or rows shared between intervals, so it is
/// solved block by block; [`robust_rates_problem`] builds the joint program.
pub fn solve_robust_rates(
    topo: &Topology,
    dms: &[TrafficMatrix],
    selected: &CandidatePathSet,
) -> Result<RateAllocation> {
    if dms.is_empty() {
        return Err(Error::Config("window must contain at least one interval".into()));
    }
    check_coverage(topo, dms, selected)?;
    let solved = dms
        .iter()
        .map(|dm| solve_interval(topo, dm, selected))
        .collect::<Result<Vec<_>>>()?;
    assemble(topo, dms[0].t, dms, selected, solved)
}

/// The joint windowed program: minimize `(1/w) sum Z_t` subject to per-pair
/// rate sums and per-link utilization rows for every interval.
pub fn robust_rates_problem(
    topo: &Topology,
    dms: &[TrafficMatrix],
    selected: &CandidatePathSet,
) -> Result<LpProblem> {
    check_coverage(topo, dms, selected)?;
    let w = dms.len() as f64;
    let mut lp = LpProblem::new(format!("robust_w{}", dms.len()));
    for dm in dms {
        add_interval(&mut lp, topo, dm, selected, &format!("_t{}", dm.t), 1.0 / w, 1.0);
    }
    Ok(lp)
}

/// Time-invariant split ratios minimizing the worst MLU over a demand set.
#[derive(Debug, Clone)]
pub struct ObliviousRouting {
    pub paths: CandidatePathSet,
    /// `rates[pair][path]`.
    pub rates: Vec<Vec<f64>>,
    /// Worst MLU over the training matrices.
    pub worst_mlu: f64,
}

impl ObliviousRouting {
    pub fn mlu(&self, topo: &Topology, dm: &TrafficMatrix) -> f64 {
        max_utilization(&link_utilizations(topo, dm, &self.paths, &self.rates))
    }
}

/// Scenario-robust split ratios: `min_r max_{dm in training} MLU(dm, r)`.
///
/// Scenario rows are generated lazily: the program starts with one row per
/// link for its most loaded scenario and adds violated rows until the
/// routing is feasible for every training matrix.
pub fn oblivious_rates(
    topo: &Topology,
    training: &[TrafficMatrix],
    cps: &CandidatePathSet,
) -> Result<ObliviousRouting> {
    if training.is_empty() {
        return Err(Error::Config("oblivious routing needs training matrices".into()));
    }
    check_coverage(topo, training, cps)?;
    let demanded: Vec<bool> = (0..cps.pair_count())
        .map(|pi| training.iter().any(|dm| dm.demand[pi] > 0.0))
        .collect();
    let scale = training
        .iter()
        .map(|dm| coefficient_scale(topo, dm, cps))
        .fold(0.0, f64::max);

    // links touched by each pair's candidates
    let mut pair_links: Vec<Vec<(usize, usize)>> = vec![Vec::new(); topo.link_count()];
    for (_, pi, p) in cps.iter() {
        if demanded[pi] {
            let k = cps.paths(pi).iter().position(|q| q.id == p.id).unwrap();
            for l in &p.links {
                pair_links[l.0].push((pi, k));
            }
        }
    }
    let mut active: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (e, terms) in pair_links.iter().enumerate() {
        if terms.is_empty() {
            continue;
        }
        let potential = |dm: &TrafficMatrix| {
            let mut seen = BTreeSet::new();
            terms
                .iter()
                .filter(|(pi, _)| seen.insert(*pi))
                .map(|(pi, _)| dm.demand[*pi])
                .sum::<f64>()
        };
        let m = (0..training.len())
            .max_by(|&a, &b| potential(&training[a]).total_cmp(&potential(&training[b])).then(b.cmp(&a)))
            .unwrap();
        active.insert((m, e));
    }

    let mut rates: Vec<Vec<f64>>;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut lp = LpProblem::new("oblivious");
        let u = lp.add_var("U", 0.0, INF, 1.0);
        let vars: Vec<Vec<Option<VarId>>> = (0..cps.pair_count())
            .map(|pi| {
                if !demanded[pi] {
                    return vec![None; cps.paths(pi).len()];
                }
                let vs: Vec<Option<VarId>> = (0..cps.paths(pi).len())
                    .map(|k| Some(lp.add_var(format!("r_{pi}_{k}"), 0.0, INF, 0.0)))
                    .collect();
                lp.add_row(format!("sum_{pi}"), vs.iter().map(|v| (v.unwrap(), 1.0)), Sense::Eq, 1.0);
                vs
            })
            .collect();
        for &(m, e) in &active {
            let cap = topo.links()[e].capacity;
            let mut terms: Vec<(VarId, f64)> = pair_links[e]
                .iter()
                .filter(|(pi, _)| training[m].demand[*pi] > 0.0)
                .map(|&(pi, k)| (vars[pi][k].unwrap(), training[m].demand[pi] / (cap * scale)))
                .collect();
            if terms.is_empty() {
                continue;
            }
            terms.push((u, -1.0));
            lp.add_row(format!("link_m{m}_{e}"), terms, Sense::Le, 0.0);
        }
        let sol = lp.solve();
        if sol.status != LpStatus::Optimal {
            return Err(Error::Solver(sol.status));
        }
        rates = vars
            .iter()
            .map(|vs| {
                if vs.iter().all(Option::is_none) {
                    default_rates(vs.len())
                } else {
                    vs.iter().map(|v| sol.value(v.unwrap()).max(0.0)).collect()
                }
            })
            .collect();
        let bound = sol.value(u) * scale;
        let mut violated: Vec<(f64, usize, usize)> = Vec::new();
        for (m, dm) in training.iter().enumerate() {
            for (e, util) in link_utilizations(topo, dm, cps, &rates).into_iter().enumerate() {
                if util > bound + REPORT_TOL * 0.1 * bound.max(1.0) && !active.contains(&(m, e)) {
                    violated.push((util - bound, m, e));
                }
            }
        }
        if violated.is_empty() || rounds > 10_000 {
            break;
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        for &(_, m, e) in violated.iter().take(2 * topo.link_count().max(1)) {
            active.insert((m, e));
        }
    }
    let worst_mlu = training
        .iter()
        .map(|dm| max_utilization(&link_utilizations(topo, dm, cps, &rates)))
        .fold(0.0, f64::max);
    for (pi, rs) in rates.iter().enumerate() {
        let sum: f64 = rs.iter().sum();
        if (sum - 1.0).abs() > REPORT_TOL {
            return Err(Error::Invariant(format!("oblivious pair {pi}: rates sum to {sum}")));
        }
    }
    Ok(ObliviousRouting {
        paths: cps.clone(),
        rates,
        worst_mlu,
    })
}

/// Result of the exhaustive robust-path search.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Global candidate indices of the best subset.
    pub selected: Vec<usize>,
    pub allocation: RateAllocation,
    pub objective: f64,
    /// Number of covering subsets solved.
    pub evaluated: usize,
}

/// Enumerates every subset of at most `r_size` candidate paths that covers
/// every pair and keeps the one with the lowest windowed objective (ties go
/// to fewer paths, then to the earlier subset in enumeration order).
pub fn brute_force_robust_paths(
    topo: &Topology,
    dms: &[TrafficMatrix],
    cps: &CandidatePathSet,
    r_size: usize,
) -> Result<BruteForceResult> {
    let n = cps.total_paths();
    if n > BRUTE_FORCE_PATH_LIMIT {
        return Err(Error::EnumerationBound {
            paths: n,
            limit: BRUTE_FORCE_PATH_LIMIT,
        });
    }
    if r_size < cps.pair_count() {
        return Err(Error::Config(format!(
            "|R| = {r_size} cannot cover {} pairs",
            cps.pair_count()
        )));
    }
    let pair_masks: Vec<u32> = (0..cps.pair_count())
        .map(|pi| (0..cps.paths(pi).len()).fold(0u32, |m, k| m | 1 << cps.global_index(pi, k)))
        .collect();
    let mut best: Option<(f64, u32, RateAllocation)> = None;
    let mut evaluated = 0;
    for mask in 1u32..(1u32 << n) {
        if mask.count_ones() as usize > r_size || pair_masks.iter().any(|pm| pm & mask == 0) {
            continue;
        }
        let selected: Vec<usize> = (0..n).filter(|g| mask >> g & 1 == 1).collect();
        let alloc = solve_robust_rates(topo, dms, &cps.restrict(&selected))?;
        evaluated += 1;
        let better = match &best {
            None => true,
            Some((obj, bm, _)) => {
                alloc.objective < obj - 1e-12
                    || ((alloc.objective - obj).abs() <= 1e-12 && mask.count_ones() < bm.count_ones())
            }
        };
        if better {
            best = Some((alloc.objective, mask, alloc));
        }
    }
    let (objective, mask, allocation) =
        best.ok_or_else(|| Error::Config("no covering subset within |R|".into()))?;
    Ok(BruteForceResult {
        selected: (0..n).filter(|g| mask >> g & 1 == 1).collect(),
        allocation,
        objective,
        evaluated,
    })
}
