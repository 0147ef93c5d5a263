use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{train, EpochStats, Experiment, ExperimentConfig};
use crate::agent::{compute_reward, greedy_action, safe_guard, PolicyModel};
use crate::baselines::{
    hindsight_robust_paths, measure_churn, mlu_optimal_allocations, stale_path_overutilization,
    EcmpRouting, Scheme, EPS_USE,
};
use crate::error::{Error, Result};
use crate::lp::{oblivious_rates, solve_mcf, ObliviousRouting};
use crate::netmodel::PathId;

/// Serializes `rows` as CSV with a header taken from the row type.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of one scheme on one test window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub start: usize,
    pub scheme: Scheme,
    pub mean_mlu: f64,
    /// `mean_mlu` over the hindsight scheme's mean MLU on the same window.
    pub ratio: f64,
    /// Path-set churn against the previous evaluated window.
    pub churn: usize,
    pub n_paths: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub w: usize,
    pub c: usize,
    pub r_size: usize,
    pub windows: usize,
    pub mean_mlu: f64,
    pub mean_mlu_ratio: f64,
    pub mean_churn: f64,
    pub config_hash: String,
}

/// Per-scheme comparison over the test windows, ratios against hindsight.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub summaries: Vec<SchemeSummary>,
    /// Grouped by window start, schemes in configured order.
    pub windows: Vec<WindowRecord>,
    /// Test windows without demand, where the ratio is undefined.
    pub skipped: Vec<usize>,
    pub wall_clock_secs: f64,
}

impl ComparisonReport {
    pub fn summary(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summaries.iter().find(|s| s.scheme == scheme)
    }

    pub fn mean_ratio(&self, scheme: Scheme) -> Option<f64> {
        self.summary(scheme).map(|s| s.mean_mlu_ratio)
    }

    /// Mean MLU series of one scheme across the evaluated windows.
    pub fn series(&self, scheme: Scheme) -> Vec<f64> {
        self.windows.iter().filter(|r| r.scheme == scheme).map(|r| r.mean_mlu).collect()
    }

    pub fn write_windows<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.windows)
    }

    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        write_csv(out, &self.summaries)
    }

    /// Run metadata, kept out of the CSVs so those stay byte-stable.
    pub fn write_metadata<W: Write>(&self, exp: &Experiment, mut out: W) -> Result<()> {
        writeln!(out, "config_hash = \"{}\"", self.config_hash)?;
        writeln!(out, "split_seed = {}", exp.config.seeds.split)?;
        writeln!(out, "init_seed = {}", exp.config.seeds.init)?;
        writeln!(out, "sample_seed = {}", exp.config.seeds.sample)?;
        writeln!(out, "r_size = {}", exp.r_size)?;
        writeln!(out, "test_windows = {}", exp.split.test.len())?;
        writeln!(out, "skipped_windows = {}", self.skipped.len())?;
        writeln!(out, "wall_clock_secs = {}", self.wall_clock_secs)?;
        writeln!(out, "version = \"{}\"", env!("CARGO_PKG_VERSION"))?;
        Ok(())
    }
}

struct Evaluated {
    mean_mlu: f64,
    paths: BTreeSet<PathId>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn rated_ids(paths: &crate::netmodel::CandidatePathSet, rates: &[Vec<f64>]) -> BTreeSet<PathId> {
    paths
        .iter()
        .filter(|(_, pi, p)| {
            let k = paths.paths(*pi).iter().position(|q| q.id == p.id).expect("own path");
            rates[*pi][k] > EPS_USE
        })
        .map(|(_, _, p)| p.id)
        .collect()
}

/// Runs every configured scheme on every test window.
///
/// Robust schemes report their installed path set; MLU-optimal reports the
/// union of paths it uses within the window; ECMP and oblivious report their
/// static routing. All schemes share the experiment's candidate set and
/// robust-set size.
pub fn evaluate(exp: &Experiment, model: Option<&PolicyModel>) -> Result<ComparisonReport> {
    let clock = std::time::Instant::now();
    let schemes = &exp.config.schemes;
    if schemes.contains(&Scheme::Drl) {
        match model {
            Some(m) => exp.check_model(m)?,
            None => return Err(Error::Config("the drl scheme needs a trained model".into())),
        }
    }
    let ecmp = if schemes.contains(&Scheme::Ecmp) {
        Some(EcmpRouting::new(&exp.cps)?)
    } else {
        None
    };
    let oblivious: Option<ObliviousRouting> = if schemes.contains(&Scheme::Oblivious) {
        Some(oblivious_rates(&exp.topo, &exp.training_matrices(), &exp.cps)?)
    } else {
        None
    };

    let per_window: Vec<(usize, f64, Vec<Evaluated>)> = exp
        .split
        .test
        .par_iter()
        .map(|&start| {
            let dms = exp.window(start);
            let hind = hindsight_robust_paths(&exp.topo, dms, &exp.cps, exp.r_size)?;
            let denom = hind.allocation.objective;
            let mut out = Vec::with_capacity(schemes.len());
            for &scheme in schemes {
                let e = match scheme {
                    Scheme::Hindsight => Evaluated {
                        mean_mlu: denom,
                        paths: hind.allocation.path_ids(),
                    },
                    Scheme::MluOptimal => {
                        let mut paths = BTreeSet::new();
                        let mut mlus = Vec::with_capacity(dms.len());
                        for dm in dms {
                            let a = solve_mcf(&exp.topo, dm, &exp.cps)?;
                            paths.extend(a.used_paths(0, EPS_USE));
                            mlus.push(a.mlu[0]);
                        }
                        Evaluated {
                            mean_mlu: mean(mlus),
                            paths,
                        }
                    }
                    Scheme::Ecmp => {
                        let r = ecmp.as_ref().expect("built above");
                        Evaluated {
                            mean_mlu: mean(dms.iter().map(|dm| r.mlu(&exp.topo, dm))),
                            paths: r.path_ids(),
                        }
                    }
                    Scheme::Oblivious => {
                        let r = oblivious.as_ref().expect("built above");
                        Evaluated {
                            mean_mlu: mean(dms.iter().map(|dm| r.mlu(&exp.topo, dm))),
                            paths: rated_ids(&r.paths, &r.rates),
                        }
                    }
                    Scheme::Drl => {
                        let m = model.expect("checked above");
                        let state = exp.state_at(start)?;
                        let action = safe_guard(greedy_action(m, &state, &exp.cps, exp.r_size)?, &exp.cps);
                        let (_, alloc) = compute_reward(&exp.topo, dms, &exp.cps, &action)?;
                        Evaluated {
                            mean_mlu: alloc.objective,
                            paths: alloc.path_ids(),
                        }
                    }
                };
                out.push(e);
            }
            Ok((start, denom, out))
        })
        .collect::<Result<_>>()?;

    let mut windows = Vec::new();
    let mut skipped = Vec::new();
    let mut prev: Vec<Option<BTreeSet<PathId>>> = vec![None; schemes.len()];
    for (start, denom, evals) in per_window {
        if !(denom > 0.0) {
            skipped.push(start);
            continue;
        }
        for (j, e) in evals.into_iter().enumerate() {
            let churn = prev[j].as_ref().map_or(0, |p| measure_churn(p, &e.paths));
            windows.push(WindowRecord {
                start,
                scheme: schemes[j],
                mean_mlu: e.mean_mlu,
                ratio: e.mean_mlu / denom,
                churn,
                n_paths: e.paths.len(),
                config_hash: exp.hash.clone(),
            });
            prev[j] = Some(e.paths);
        }
    }
    let summaries = schemes
        .iter()
        .map(|&scheme| {
            let rows: Vec<&WindowRecord> = windows.iter().filter(|r| r.scheme == scheme).collect();
            SchemeSummary {
                scheme,
                w: exp.w(),
                c: exp.c(),
                r_size: exp.r_size,
                windows: rows.len(),
                mean_mlu: mean(rows.iter().map(|r| r.mean_mlu)),
                mean_mlu_ratio: mean(rows.iter().map(|r| r.ratio)),
                mean_churn: mean(rows.iter().map(|r| r.churn as f64)),
                config_hash: exp.hash.clone(),
            }
        })
        .collect();
    Ok(ComparisonReport {
        config_hash: exp.hash.clone(),
        summaries,
        windows,
        skipped,
        wall_clock_secs: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChurnRow {
    pub scheme: Scheme,
    /// Trace interval whose path set is compared with the previous one.
    pub t: usize,
    pub churn: usize,
    pub config_hash: String,
}

/// Per-interval path churn of MLU-optimal routing and, when a model is
/// given, of the agent.
///
/// MLU-optimal covers intervals `c+1 ..`. The agent decides at window starts
/// that are multiples of `w` (the first at or after `c`) and keeps its path
/// set for the window, so its churn is zero inside windows.
pub fn churn_report(exp: &Experiment, model: Option<&PolicyModel>) -> Result<Vec<ChurnRow>> {
    let (c, w, len) = (exp.c(), exp.w(), exp.trace.len());
    let mut rows = Vec::new();
    if len > c {
        let allocs = mlu_optimal_allocations(&exp.topo, &exp.trace.matrices[c..], &exp.cps)?;
        let used: Vec<_> = allocs.iter().map(|a| a.used_paths(0, EPS_USE)).collect();
        for (i, pair) in used.windows(2).enumerate() {
            rows.push(ChurnRow {
                scheme: Scheme::MluOptimal,
                t: c + i + 1,
                churn: measure_churn(&pair[0], &pair[1]),
                config_hash: exp.hash.clone(),
            });
        }
    }
    if let Some(m) = model {
        exp.check_model(m)?;
        let first = c.div_ceil(w) * w;
        let starts: Vec<usize> = (first..).step_by(w).take_while(|s| s + w <= len).collect();
        let sets: Vec<BTreeSet<PathId>> = starts
            .par_iter()
            .map(|&s| {
                let state = exp.state_at(s)?;
                let action = safe_guard(greedy_action(m, &state, &exp.cps, exp.r_size)?, &exp.cps);
                Ok(action.paths.iter().map(|&g| exp.cps.path_at(g).id).collect())
            })
            .collect::<Result<_>>()?;
        for (k, &s) in starts.iter().enumerate() {
            for t in s..s + w {
                if t == first {
                    continue;
                }
                let churn = if t == s { measure_churn(&sets[k - 1], &sets[k]) } else { 0 };
                rows.push(ChurnRow {
                    scheme: Scheme::Drl,
                    t,
                    churn,
                    config_hash: exp.hash.clone(),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverutilRow {
    /// Interval carried on the stale routing of `t - 1`.
    pub t: usize,
    pub link: String,
    /// Utilization under the stale routing minus under the fresh one.
    pub difference: f64,
    pub config_hash: String,
}

/// Stale-path over-utilization of every link at every consecutive pair of
/// MLU-optimal routings.
pub fn overutil_report(exp: &Experiment) -> Result<Vec<OverutilRow>> {
    let allocs = mlu_optimal_allocations(&exp.topo, &exp.trace.matrices, &exp.cps)?;
    let mut rows = Vec::new();
    for t in 1..allocs.len() {
        let diff = stale_path_overutilization(
            &exp.topo,
            &exp.trace.matrices[t],
            allocs[t - 1].routing(0),
            allocs[t].routing(0),
        );
        for (l, d) in diff.into_iter().enumerate() {
            rows.push(OverutilRow {
                t,
                link: exp.topo.link_label(crate::netmodel::LinkId(l)),
                difference: d,
                config_hash: exp.hash.clone(),
            });
        }
    }
    Ok(rows)
}

/// One train-and-evaluate run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRun {
    pub w: usize,
    pub c: usize,
    pub report: ComparisonReport,
    pub curve: Vec<EpochStats>,
}

/// Everything the figure files are drawn from.
#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub config_hash: String,
    pub churn: Vec<ChurnRow>,
    pub overutil: Vec<OverutilRow>,
    pub by_w: Vec<SweepRun>,
    pub by_c: Vec<SweepRun>,
}

fn sweep_run(base: &ExperimentConfig, w: usize, c: usize) -> Result<SweepRun> {
    let cfg = ExperimentConfig { w, c, ..base.clone() };
    let exp = Experiment::prepare(cfg)?;
    let trained = train(&exp, None, None)?;
    let report = evaluate(&exp, Some(&trained.model))?;
    Ok(SweepRun {
        w,
        c,
        report,
        curve: trained.curve,
    })
}

/// Trains and evaluates once per `w` in the sweep (at the configured `c`)
/// and once per `c` (at the configured `w`), plus the churn and
/// over-utilization reports at the configured point.
pub fn run_sweeps(config: &ExperimentConfig) -> Result<PlotData> {
    let exp = Experiment::prepare(config.clone())?;
    let base = train(&exp, None, None)?;
    let mut data = PlotData {
        config_hash: exp.hash.clone(),
        churn: churn_report(&exp, Some(&base.model))?,
        overutil: overutil_report(&exp)?,
        ..PlotData::default()
    };
    for &w in &config.w_sweep {
        log::info!("sweep w = {w}");
        data.by_w.push(sweep_run(config, w, config.c)?);
    }
    for &c in &config.c_sweep {
        log::info!("sweep c = {c}");
        data.by_c.push(sweep_run(config, config.w, c)?);
    }
    Ok(data)
}

fn cdf<T: PartialOrd + Copy>(mut xs: Vec<T>) -> Vec<(T, f64)> {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("comparable values"));
    let n = xs.len() as f64;
    let mut out: Vec<(T, f64)> = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = (i + 1) as f64 / n,
            _ => out.push((*x, (i + 1) as f64 / n)),
        }
    }
    out
}

/// Writes `fig2a.csv` .. `fig5b.csv` into `dir` and returns their paths.
///
/// | file | columns |
/// |------|---------|
/// | fig2a | `scheme,churn,cdf,config_hash` |
/// | fig2b | `difference,cdf,config_hash` |
/// | fig3 | `scheme,w,mean_mlu_ratio,config_hash` |
/// | fig4 | `scheme,c,mean_mlu_ratio,config_hash` |
/// | fig5a | `w,epoch,mean_reward,config_hash` |
/// | fig5b | `c,epoch,mean_reward,config_hash` |
pub fn export_plot_data(dir: &Path, data: &PlotData) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let hash = data.config_hash.as_str();
    let mut written = Vec::new();
    let mut file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>> {
        let p = dir.join(name);
        let f = std::fs::File::create(&p)?;
        written.push(p);
        Ok(std::io::BufWriter::new(f))
    };

    #[derive(Serialize)]
    struct Fig2a<'a> {
        scheme: Scheme,
        churn: usize,
        cdf: f64,
        config_hash: &'a str,
    }
    let mut rows = Vec::new();
    for scheme in [Scheme::MluOptimal, Scheme::Drl] {
        let xs: Vec<usize> = data.churn.iter().filter(|r| r.scheme == scheme).map(|r| r.churn).collect();
        rows.extend(cdf(xs).into_iter().map(|(churn, cdf)| Fig2a {
            scheme,
            churn,
            cdf,
            config_hash: hash,
        }));
    }
    write_csv(file("fig2a.csv")?, rows)?;

    #[derive(Serialize)]
    struct Fig2b<'a> {
        difference: f64,
        cdf: f64,
        config_hash: &'a str,
    }
    let xs: Vec<f64> = data.overutil.iter().map(|r| r.difference).collect();
    write_csv(
        file("fig2b.csv")?,
        cdf(xs).into_iter().map(|(difference, cdf)| Fig2b {
            difference,
            cdf,
            config_hash: hash,
        }),
    )?;

    #[derive(Serialize)]
    struct Fig3<'a> {
        scheme: Scheme,
        w: usize,
        mean_mlu_ratio: f64,
        config_hash: &'a str,
    }
    write_csv(
        file("fig3.csv")?,
        data.by_w.iter().flat_map(|run| {
            run.report.summaries.iter().map(move |s| Fig3 {
                scheme: s.scheme,
                w: run.w,
                mean_mlu_ratio: s.mean_mlu_ratio,
                config_hash: hash,
            })
        }),
    )?;

    #[derive(Serialize)]
    struct Fig4<'a> {
        scheme: Scheme,
        c: usize,
        mean_mlu_ratio: f64,
        config_hash: &'a str,
    }
    write_csv(
        file("fig4.csv")?,
        data.by_c.iter().flat_map(|run| {
            run.report.summaries.iter().map(move |s| Fig4 {
                scheme: s.scheme,
                c: run.c,
                mean_mlu_ratio: s.mean_mlu_ratio,
                config_hash: hash,
            })
        }),
    )?;

    #[derive(Serialize)]
    struct Fig5a<'a> {
        w: usize,
        epoch: usize,
        mean_reward: f64,
        config_hash: &'a str,
    }
    write_csv(
        file("fig5a.csv")?,
        data.by_w.iter().flat_map(|run| {
            run.curve.iter().map(move |e| Fig5a {
                w: run.w,
                epoch: e.epoch,
                mean_reward: e.mean_reward,
                config_hash: hash,
            })
        }),
    )?;

    #[derive(Serialize)]
    struct Fig5b<'a> {
        c: usize,
        epoch: usize,
        mean_reward: f64,
        config_hash: &'a str,
    }
    write_csv(
        file("fig5b.csv")?,
        data.by_c.iter().flat_map(|run| {
            run.curve.iter().map(move |e| Fig5b {
                c: run.c,
                epoch: e.epoch,
                mean_reward: e.mean_reward,
                config_hash: hash,
            })
        }),
    )?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::tests::diamond_experiment;
    use super::super::{ModelConfig, RSize};
    use super::*;
    use crate::dataio::{TrafficMatrix, TrafficTrace};
    use crate::netmodel::{build_topology, FlowPair, TopologySpec};

    /// One pair over two disjoint branches of capacity 10 and a constant
    /// demand of 8, with one robust path allowed.
    fn micro(len: usize) -> Experiment {
        let topo = build_topology(
            &TopologySpec::default()
                .link("A", "B", 10.0, 1.0)
                .link("B", "D", 10.0, 1.0)
                .link("A", "C", 10.0, 1.0)
                .link("C", "D", 10.0, 1.0),
        )
        .unwrap();
        let pair = FlowPair::new(topo.node_id("A").unwrap(), topo.node_id("D").unwrap()).unwrap();
        let matrices = (0..len).map(|t| TrafficMatrix { t, demand: vec![8.0] }).collect();
        let trace = TrafficTrace::new(vec![pair], matrices, 300.0).unwrap();
        let cfg = ExperimentConfig {
            topology: "micro.topo".into(),
            trace: Some("micro.csv".into()),
            k: 2,
            c: 1,
            w: 1,
            r_size: RSize::Fixed(1),
            epochs: 1,
            epoch_length: Some(2),
            model: ModelConfig {
                filters: 2,
                hidden: 2,
                beta: 0.1,
            },
            ..ExperimentConfig::default()
        };
        Experiment::from_parts(cfg, topo, trace).unwrap()
    }

    #[test]
    fn micro_benchmark_ratios() {
        let exp = micro(8);
        let model = exp.new_model().unwrap();
        let rep = evaluate(&exp, Some(&model)).unwrap();
        let expect = [
            (Scheme::Drl, 1.0),
            (Scheme::Hindsight, 1.0),
            (Scheme::MluOptimal, 0.5),
            (Scheme::Ecmp, 0.5),
            (Scheme::Oblivious, 0.5),
        ];
        for (scheme, ratio) in expect {
            let got = rep.mean_ratio(scheme).unwrap();
            assert!((got - ratio).abs() < 1e-6, "{scheme}: {got}");
        }
        assert_eq!(rep.summary(Scheme::Ecmp).unwrap().mean_mlu, 0.4);
        assert!(rep.skipped.is_empty());
        // constant demand: no scheme changes its paths
        assert!(rep.windows.iter().all(|r| r.churn == 0));
    }

    #[test]
    fn drl_requires_model() {
        let exp = micro(8);
        assert!(matches!(evaluate(&exp, None), Err(Error::Config(_))));
    }

    #[test]
    fn ecmp_never_beats_mlu_optimal() {
        let exp = diamond_experiment(1);
        let model = exp.new_model().unwrap();
        let rep = evaluate(&exp, Some(&model)).unwrap();
        let starts: BTreeSet<usize> = rep.windows.iter().map(|r| r.start).collect();
        for s in starts {
            let get = |scheme| {
                rep.windows
                    .iter()
                    .find(|r| r.start == s && r.scheme == scheme)
                    .unwrap()
                    .ratio
            };
            assert!(get(Scheme::Ecmp) >= get(Scheme::MluOptimal) - 1e-9);
        }
    }

    #[test]
    fn constant_trace_has_no_mlu_optimal_churn() {
        let exp = micro(8);
        let rows = churn_report(&exp, None).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.churn == 0 && r.scheme == Scheme::MluOptimal));
    }

    #[test]
    fn agent_churn_only_at_window_boundaries() {
        let mut exp = diamond_experiment(1);
        exp.config.w = 3;
        let model = exp.new_model().unwrap();
        let rows = churn_report(&exp, Some(&model)).unwrap();
        let drl: Vec<&ChurnRow> = rows.iter().filter(|r| r.scheme == Scheme::Drl).collect();
        assert!(!drl.is_empty());
        assert!(drl.iter().all(|r| r.churn == 0 || r.t % 3 == 0));
        assert!(drl.iter().all(|r| r.t >= 3));
    }

    #[test]
    fn overutil_is_zero_for_constant_trace() {
        let exp = micro(4);
        let rows = overutil_report(&exp).unwrap();
        assert_eq!(rows.len(), 3 * 4);
        assert!(rows.iter().all(|r| r.difference.abs() < 1e-9));
    }

    #[test]
    fn figure_files_have_fixed_schemas() {
        let exp = diamond_experiment(2);
        let trained = train(&exp, None, None).unwrap();
        let report = evaluate(&exp, Some(&trained.model)).unwrap();
        let run = SweepRun {
            w: 1,
            c: 2,
            report,
            curve: trained.curve,
        };
        let data = PlotData {
            config_hash: exp.hash.clone(),
            churn: churn_report(&exp, Some(&trained.model)).unwrap(),
            overutil: overutil_report(&exp).unwrap(),
            by_w: vec![run.clone()],
            by_c: vec![run],
        };
        let dir = tempfile::tempdir().unwrap();
        let files = export_plot_data(dir.path(), &data).unwrap();
        assert_eq!(files.len(), 6);
        let header = |name: &str| {
            std::fs::read_to_string(dir.path().join(name))
                .unwrap()
                .lines()
                .next()
                .unwrap()
                .to_owned()
        };
        assert_eq!(header("fig2a.csv"), "scheme,churn,cdf,config_hash");
        assert_eq!(header("fig2b.csv"), "difference,cdf,config_hash");
        assert_eq!(header("fig3.csv"), "scheme,w,mean_mlu_ratio,config_hash");
        assert_eq!(header("fig4.csv"), "scheme,c,mean_mlu_ratio,config_hash");
        assert_eq!(header("fig5a.csv"), "w,epoch,mean_reward,config_hash");
        assert_eq!(header("fig5b.csv"), "c,epoch,mean_reward,config_hash");
        let fig3 = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
        assert_eq!(fig3.lines().count(), 1 + 5);
        assert!(fig3.lines().skip(1).all(|l| l.ends_with(&exp.hash)));
    }

    #[test]
    fn cdf_steps() {
        assert_eq!(cdf(vec![3, 1, 1, 2]), vec![(1, 0.5), (2, 0.75), (3, 1.0)]);
    }
}
