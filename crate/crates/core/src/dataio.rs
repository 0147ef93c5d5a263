//! Traffic-matrix traces: loading, scaling, synthetic generation and
//! train/test splitting.
//!
//! Demands and capacities share one unit, traffic units per interval. The
//! loaders convert source data into that unit where the source uses another.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path as FsPath;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{all_pairs, FlowPair, Topology};

/// Demands of one interval, aligned with the owning trace's pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    pub t: usize,
    pub demand: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(t: usize, pairs: usize) -> Self {
        TrafficMatrix {
            t,
            demand: vec![0.0; pairs],
        }
    }

    pub fn total(&self) -> f64 {
        self.demand.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        TrafficMatrix {
            t: self.t,
            demand: self.demand.iter().map(|d| d * factor).collect(),
        }
    }
}

/// Time-ordered demand matrices over a fixed, sorted pair set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficTrace {
    pub pairs: Vec<FlowPair>,
    pub matrices: Vec<TrafficMatrix>,
    pub interval_seconds: f64,
}

impl TrafficTrace {
    pub fn new(pairs: Vec<FlowPair>, matrices: Vec<TrafficMatrix>, interval_seconds: f64) -> Result<Self> {
        let trace = TrafficTrace {
            pairs,
            matrices,
            interval_seconds,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrix(&self, t: usize) -> &TrafficMatrix {
        &self.matrices[t]
    }

    pub fn window(&self, start: usize, len: usize) -> &[TrafficMatrix] {
        &self.matrices[start..start + len]
    }

    pub fn demand(&self, t: usize, pair: FlowPair) -> f64 {
        self.pairs
            .binary_search(&pair)
            .map(|i| self.matrices[t].demand[i])
            .unwrap_or(0.0)
    }

    pub fn max_demand(&self) -> f64 {
        self.matrices
            .iter()
            .flat_map(|m| m.demand.iter().copied())
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Trace("pair set must be sorted and unique".into()));
        }
        if !(self.interval_seconds > 0.0) {
            return Err(Error::Trace("interval duration must be positive".into()));
        }
        for (i, m) in self.matrices.iter().enumerate() {
            if m.t != i {
                return Err(Error::Trace(format!("interval {i} carries index {}", m.t)));
            }
            if m.demand.len() != self.pairs.len() {
                return Err(Error::Trace(format!("interval {i} has the wrong pair count")));
            }
            if let Some(d) = m.demand.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
                return Err(Error::Trace(format!("interval {i} has invalid demand {d}")));
            }
        }
        Ok(())
    }

    /// Writes the native CSV format (`t,src,dst,demand`), skipping zeros
    /// except in the first interval so the pair set survives a round trip.
    pub fn write_csv<W: Write>(&self, topo: &Topology, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for m in &self.matrices {
            for (pair, d) in self.pairs.iter().zip(&m.demand) {
                if *d == 0.0 && m.t != 0 {
                    continue;
                }
                w.serialize(CsvRow {
                    t: m.t,
                    src: topo.node_name(pair.src).to_owned(),
                    dst: topo.node_name(pair.dst).to_owned(),
                    demand: *d,
                })?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Source format of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceFormat {
    /// Native CSV with header `t,src,dst,demand`.
    Csv,
    /// Public Abilene archive rows: whitespace-separated, 5 values per
    /// origin-destination pair (real OD first), pairs in row-major node
    /// order, values in units of 100 bytes per interval. Converted to bits.
    Abilene,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: usize,
    src: String,
    dst: String,
    demand: f64,
}

/// Loads a trace file against `topo`.
pub fn load_trace(
    path: impl AsRef<FsPath>,
    format: TraceFormat,
    topo: &Topology,
    interval_seconds: f64,
) -> Result<TrafficTrace> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    match format {
        TraceFormat::Csv => read_csv_trace(file, topo, interval_seconds),
        TraceFormat::Abilene => {
            read_abilene_trace(std::io::BufReader::new(file), topo, interval_seconds)
        }
    }
}

pub fn read_csv_trace<R: std::io::Read>(
    reader: R,
    topo: &Topology,
    interval_seconds: f64,
) -> Result<TrafficTrace> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut cells: BTreeMap<(usize, FlowPair), f64> = BTreeMap::new();
    let mut pairs = BTreeSet::new();
    let mut len = 0;
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let loc = || format!("row {}", i + 2);
        let row = row.map_err(|e| Error::parse(loc(), e.to_string()))?;
        let node = |name: &str| {
            topo.node_id(name)
                .ok_or_else(|| Error::parse(loc(), format!("unknown node {name:?}")))
        };
        let pair = FlowPair::new(node(&row.src)?, node(&row.dst)?)
            .map_err(|e| Error::parse(loc(), e.to_string()))?;
        if !(row.demand >= 0.0) || !row.demand.is_finite() {
            return Err(Error::parse(loc(), format!("invalid demand {}", row.demand)));
        }
        if cells.insert((row.t, pair), row.demand).is_some() {
            return Err(Error::parse(loc(), "duplicate (t, src, dst) row"));
        }
        pairs.insert(pair);
        len = len.max(row.t + 1);
    }
    let pairs: Vec<FlowPair> = pairs.into_iter().collect();
    let mut matrices: Vec<TrafficMatrix> = (0..len).map(|t| TrafficMatrix::zeros(t, pairs.len())).collect();
    for ((t, pair), d) in cells {
        let idx = pairs.binary_search(&pair).unwrap();
        matrices[t].demand[idx] = d;
    }
    TrafficTrace::new(pairs, matrices, interval_seconds)
}

/// Bits per Abilene archive unit (100 bytes).
pub const ABILENE_UNIT_BITS: f64 = 800.0;

pub fn read_abilene_trace<R: std::io::BufRead>(
    reader: R,
    topo: &Topology,
    interval_seconds: f64,
) -> Result<TrafficTrace> {
    let n = topo.node_count();
    let pairs = all_pairs(topo);
    let mut matrices = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = || format!("line {}", lineno + 1);
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| Error::parse(loc(), e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n * n * 5 {
            return Err(Error::parse(
                loc(),
                format!("expected {} values for {n} nodes, found {}", n * n * 5, values.len()),
            ));
        }
        let t = matrices.len();
        let mut m = TrafficMatrix::zeros(t, pairs.len());
        for (k, pair) in pairs.iter().enumerate() {
            let v = values[(pair.src.0 * n + pair.dst.0) * 5];
            if !(v >= 0.0) {
                return Err(Error::parse(loc(), format!("negative demand {v}")));
            }
            m.demand[k] = v * ABILENE_UNIT_BITS;
        }
        matrices.push(m);
    }
    TrafficTrace::new(pairs, matrices, interval_seconds)
}

/// Multiplies every demand by `factor`.
pub fn scale_trace(trace: &TrafficTrace, factor: f64) -> Result<TrafficTrace> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Config(format!("scale factor must be positive, got {factor}")));
    }
    Ok(TrafficTrace {
        pairs: trace.pairs.clone(),
        matrices: trace.matrices.iter().map(|m| m.scaled(factor)).collect(),
        interval_seconds: trace.interval_seconds,
    })
}

/// Draws each link capacity uniformly from `[lo, hi]`.
pub fn random_capacities(topo: &Topology, lo: f64, hi: f64, seed: u64) -> Result<Topology> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::Config(format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    topo.with_capacities(|_, _| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPattern {
    Periodic,
    Gravity,
    RegimeSwitch,
}

impl std::str::FromStr for SynthPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(SynthPattern::Periodic),
            "gravity" => Ok(SynthPattern::Gravity),
            "regime-switch" => Ok(SynthPattern::RegimeSwitch),
            other => Err(Error::Config(format!("unknown synthetic pattern {other:?}"))),
        }
    }
}

/// Parameters of the synthetic trace generator.
///
/// Every pattern starts from a gravity matrix over `pairs`:
/// `D(s,d) = total_demand * m[s] * m[d] / sum over pairs of m[s'] * m[d']`,
/// then multiplies each entry by independent noise drawn from
/// `[1 - noise, 1 + noise]`.
///
/// - `gravity`: constant masses.
/// - `periodic`: the gravity matrix times `1 + amplitude * sin(2 pi t / period)`.
/// - `regime-switch`: alternates between the `masses` and `alt_masses`
///   gravity matrices every `period` intervals, starting with `masses`.
///
/// Masses not given explicitly are drawn from `[0.5, 1.5]` with the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub pattern: SynthPattern,
    pub length: usize,
    pub seed: u64,
    pub total_demand: f64,
    /// Restrict traffic to these `(src, dst)` node names; all pairs otherwise.
    pub pairs: Option<Vec<(String, String)>>,
    pub masses: Option<Vec<f64>>,
    pub alt_masses: Option<Vec<f64>>,
    pub period: usize,
    pub amplitude: f64,
    pub noise: f64,
    pub interval_seconds: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            pattern: SynthPattern::Gravity,
            length: 48,
            seed: 0,
            total_demand: 1.0,
            pairs: None,
            masses: None,
            alt_masses: None,
            period: 12,
            amplitude: 0.5,
            noise: 0.05,
            interval_seconds: 300.0,
        }
    }
}

fn gravity(pairs: &[FlowPair], masses: &[f64], total: f64) -> Vec<f64> {
    let weights: Vec<f64> = pairs.iter().map(|p| masses[p.src.0] * masses[p.dst.0]).collect();
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0.0; pairs.len()];
    }
    weights.iter().map(|w| total * w / sum).collect()
}

pub fn synth_trace(topo: &Topology, spec: &SynthSpec) -> Result<TrafficTrace> {
    if spec.length == 0 {
        return Err(Error::Config("synthetic trace length must be at least 1".into()));
    }
    if spec.period == 0 || !(spec.noise >= 0.0 && spec.noise < 1.0) || !(spec.total_demand >= 0.0) {
        return Err(Error::Config("invalid synthetic trace parameters".into()));
    }
    let n = topo.node_count();
    let mut pairs = match &spec.pairs {
        None => all_pairs(topo),
        Some(list) => list
            .iter()
            .map(|(s, d)| {
                let id = |name: &str| {
                    topo.node_id(name)
                        .ok_or_else(|| Error::Config(format!("unknown node {name:?}")))
                };
                FlowPair::new(id(s)?, id(d)?)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    pairs.sort();
    pairs.dedup();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let masses = |given: &Option<Vec<f64>>, rng: &mut ChaCha8Rng| -> Result<Vec<f64>> {
        match given {
            Some(m) if m.len() == n && m.iter().all(|x| *x >= 0.0) => Ok(m.clone()),
            Some(_) => Err(Error::Config(format!("masses need {n} nonnegative entries"))),
            None => Ok((0..n).map(|_| rng.gen_range(0.5..1.5)).collect()),
        }
    };
    let base = gravity(&pairs, &masses(&spec.masses, &mut rng)?, spec.total_demand);
    let alt = match spec.pattern {
        SynthPattern::RegimeSwitch => gravity(&pairs, &masses(&spec.alt_masses, &mut rng)?, spec.total_demand),
        _ => base.clone(),
    };

    let matrices = (0..spec.length)
        .map(|t| {
            let (source, factor) = match spec.pattern {
                SynthPattern::Gravity => (&base, 1.0),
                SynthPattern::Periodic => (
                    &base,
                    1.0 + spec.amplitude
                        * (2.0 * std::f64::consts::PI * t as f64 / spec.period as f64).sin(),
                ),
                SynthPattern::RegimeSwitch => {
                    if (t / spec.period).is_multiple_of(2) {
                        (&base, 1.0)
                    } else {
                        (&alt, 1.0)
                    }
                }
            };
            let demand = source
                .iter()
                .map(|d| {
                    let jitter = if spec.noise > 0.0 {
                        rng.gen_range(1.0 - spec.noise..=1.0 + spec.noise)
                    } else {
                        1.0
                    };
                    (d * factor * jitter).max(0.0)
                })
                .collect();
            TrafficMatrix { t, demand }
        })
        .collect();
    TrafficTrace::new(pairs, matrices, spec.interval_seconds)
}

/// Disjoint train/test partition of usable window start indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Usable starts `t` satisfy `t >= c` (a full history) and `t + w <= len`
/// (a full look-ahead window).
pub fn usable_starts(len: usize, c: usize, w: usize) -> std::ops::Range<usize> {
    if len < c + w {
        return c..c;
    }
    c..len - w + 1
}

pub fn split_trace(trace: &TrafficTrace, train_frac: f64, w: usize, c: usize, seed: u64) -> Result<TraceSplit> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Config(format!("train fraction must be in (0, 1), got {train_frac}")));
    }
    if w == 0 {
        return Err(Error::Config("w must be at least 1".into()));
    }
    let mut starts: Vec<usize> = usable_starts(trace.len(), c, w).collect();
    if starts.is_empty() {
        return Err(Error::Trace(format!(
            "trace of length {} has no window with c = {c}, w = {w}",
            trace.len()
        )));
    }
    let n_train = ((starts.len() as f64) * train_frac).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    starts.shuffle(&mut rng);
    let mut train = starts[..n_train].to_vec();
    let mut test = starts[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(TraceSplit { train, test, seed })
}
