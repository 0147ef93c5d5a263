//! Experiment orchestration: loading, training, evaluation and reports.

mod config;
mod report;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{AutoKeyword, CapacitySpec, ExperimentConfig, ModelConfig, RSize, Seeds};
pub use report::{
    churn_report, evaluate, export_plot_data, overutil_report, run_sweeps, write_csv, ChurnRow,
    ComparisonReport, OverutilRow, PlotData, SchemeSummary, SweepRun, WindowRecord,
};

use crate::agent::{
    compute_reward, encode_state, paths_fingerprint, reinforce_update, safe_guard, sample_action,
    AgentState, Experience, ModelShape, Normalizer, PolicyModel,
};
use crate::baselines::{calibrate_r_from, hindsight_robust_paths, mlu_optimal_allocations};
use crate::dataio::{load_trace, random_capacities, scale_trace, split_trace, synth_trace, TraceSplit, TrafficMatrix, TrafficTrace};
use crate::error::{Error, Result};
use crate::netmodel::{load_topology, CandidatePathSet, Topology};

/// A loaded experiment: network, scaled trace, candidate paths, split and
/// the resolved robust-set size.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub hash: String,
    pub topo: Topology,
    pub trace: TrafficTrace,
    pub cps: CandidatePathSet,
    pub split: TraceSplit,
    pub r_size: usize,
    /// Largest demand over the intervals the training windows touch.
    pub normalizer: f64,
}

impl Experiment {
    /// Loads the topology and trace named by `config`.
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let topo = load_topology(&config.topology)?;
        let topo = match &config.capacities {
            Some(c) => random_capacities(&topo, c.lo, c.hi, c.seed)?,
            None => topo,
        };
        let trace = match (&config.trace, &config.synth) {
            (Some(path), _) => load_trace(path, config.trace_format, &topo, config.interval_seconds)?,
            (None, Some(spec)) => synth_trace(&topo, spec)?,
            (None, None) => unreachable!("validated"),
        };
        Self::from_parts(config, topo, trace)
    }

    /// Builds an experiment around an already loaded network and trace. The
    /// trace is scaled by `config.scale`.
    pub fn from_parts(config: ExperimentConfig, topo: Topology, trace: TrafficTrace) -> Result<Self> {
        config.validate()?;
        let trace = if config.scale == 1.0 {
            trace
        } else {
            scale_trace(&trace, config.scale)?
        };
        let cps = CandidatePathSet::k_shortest(&topo, &trace.pairs, config.k)?;
        let split = split_trace(&trace, config.train_fraction, config.w, config.c, config.seeds.split)?;
        if split.train.is_empty() || split.test.is_empty() {
            return Err(Error::Trace(format!(
                "trace of length {} leaves an empty train or test split",
                trace.len()
            )));
        }
        let touched: BTreeSet<usize> = split
            .train
            .iter()
            .flat_map(|&s| s - config.c..s + config.w)
            .collect();
        let normalizer = touched
            .iter()
            .flat_map(|&t| trace.matrices[t].demand.iter().copied())
            .fold(0.0, f64::max);
        let r_size = match config.r_size {
            RSize::Fixed(r) => r,
            RSize::Auto(_) => {
                let windows: BTreeSet<usize> = split.train.iter().flat_map(|&s| s..s + config.w).collect();
                let dms: Vec<TrafficMatrix> = windows.iter().map(|&t| trace.matrices[t].clone()).collect();
                let allocs = mlu_optimal_allocations(&topo, &dms, &cps)?;
                calibrate_r_from(&allocs, cps.pair_count())
            }
        }
        .min(cps.total_paths());
        let hash = config.hash();
        Ok(Experiment {
            config,
            hash,
            topo,
            trace,
            cps,
            split,
            r_size,
            normalizer,
        })
    }

    pub fn w(&self) -> usize {
        self.config.w
    }

    pub fn c(&self) -> usize {
        self.config.c
    }

    /// The `w` matrices starting at `start`.
    pub fn window(&self, start: usize) -> &[TrafficMatrix] {
        self.trace.window(start, self.config.w)
    }

    /// The encoded `c` matrices preceding `start`.
    pub fn state_at(&self, start: usize) -> Result<AgentState> {
        let c = self.config.c;
        if start < c {
            return Err(Error::Config(format!("start {start} has fewer than {c} past intervals")));
        }
        encode_state(
            self.trace.window(start - c, c),
            &self.trace.pairs,
            self.topo.node_count(),
            c,
            Normalizer::Fixed(self.normalizer),
        )
    }

    /// Distinct matrices covered by the training windows.
    pub fn training_matrices(&self) -> Vec<TrafficMatrix> {
        let idx: BTreeSet<usize> = self.split.train.iter().flat_map(|&s| s..s + self.config.w).collect();
        idx.into_iter().map(|t| self.trace.matrices[t].clone()).collect()
    }

    pub fn model_shape(&self) -> ModelShape {
        ModelShape {
            filters: self.config.model.filters,
            hidden: self.config.model.hidden,
            ..ModelShape::new(self.config.c, self.topo.node_count(), self.cps.total_paths())
        }
    }

    pub fn new_model(&self) -> Result<PolicyModel> {
        let mut m = PolicyModel::new(self.model_shape(), self.config.model.beta, self.config.seeds.init)?;
        m.paths_fingerprint = paths_fingerprint(&self.cps);
        Ok(m)
    }

    /// Rejects checkpoints built for another network, path set or history.
    pub fn check_model(&self, model: &PolicyModel) -> Result<()> {
        let want = self.model_shape();
        if model.shape() != want {
            return Err(Error::Shape(format!(
                "checkpoint shape {:?} does not match experiment shape {want:?}",
                model.shape()
            )));
        }
        if model.paths_fingerprint != paths_fingerprint(&self.cps) {
            return Err(Error::Shape("checkpoint was trained on a different candidate path set".into()));
        }
        Ok(())
    }

    /// Hindsight mean MLU of each window start, computed in parallel.
    pub fn hindsight_objectives(&self, starts: &[usize]) -> Result<Vec<f64>> {
        starts
            .par_iter()
            .map(|&s| Ok(hindsight_robust_paths(&self.topo, self.window(s), &self.cps, self.r_size)?.allocation.objective))
            .collect()
    }
}

/// Aggregates of one training epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_reward: f64,
    /// Mean over the epoch's experiences of mean MLU divided by the
    /// hindsight mean MLU of the same window.
    pub mean_mlu_ratio: f64,
    pub learning_rate: f64,
    pub updates: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    pub curve: Vec<EpochStats>,
}

fn sampling_rng(seed: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// REINFORCE training over the train split.
///
/// Each epoch draws `epoch_length` window starts from a shuffled cycle over
/// the training starts and splits them into update batches. Passing a
/// checkpointed model resumes from its step counter. When `checkpoint_dir`
/// is given the model is written there every `checkpoint_every` epochs and
/// at the end.
pub fn train(exp: &Experiment, resume: Option<PolicyModel>, checkpoint_dir: Option<&Path>) -> Result<TrainOutcome> {
    let cfg = &exp.config;
    let mut model = match resume {
        Some(m) => {
            exp.check_model(&m)?;
            m
        }
        None => exp.new_model()?,
    };
    let train = &exp.split.train;
    let hindsight = exp.hindsight_objectives(train)?;
    let epoch_len = cfg.epoch_starts(exp.trace.interval_seconds);
    let batch = cfg.batch_size.unwrap_or(epoch_len).min(epoch_len);

    let mut rng = sampling_rng(cfg.seeds.sample, model.step);
    let mut cycle: Vec<usize> = Vec::new();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let mut picks = Vec::with_capacity(epoch_len);
        while picks.len() < epoch_len {
            if cycle.is_empty() {
                cycle = (0..train.len()).collect();
                cycle.shuffle(&mut rng);
            }
            picks.push(cycle.pop().expect("nonempty cycle"));
        }

        let (mut reward_sum, mut ratio_sum, mut ratio_n, mut count) = (0.0, 0.0, 0usize, 0usize);
        let mut updates = 0;
        let mut lr = 0.0;
        for chunk in picks.chunks(batch) {
            let mut pending = Vec::with_capacity(chunk.len() * cfg.samples_per_state);
            for &i in chunk {
                let state = exp.state_at(train[i])?;
                for _ in 0..cfg.samples_per_state {
                    let action = safe_guard(sample_action(&model, &state, exp.r_size, &mut rng)?, &exp.cps);
                    pending.push((i, state.clone(), action));
                }
            }
            let solved: Vec<(f64, f64)> = pending
                .par_iter()
                .map(|(i, _, action)| {
                    let (r, alloc) = compute_reward(&exp.topo, exp.window(train[*i]), &exp.cps, action)?;
                    Ok((r, alloc.objective))
                })
                .collect::<Result<_>>()?;
            let mut experiences = Vec::with_capacity(pending.len());
            for ((i, state, action), (reward, mean_mlu)) in pending.into_iter().zip(solved) {
                reward_sum += reward;
                count += 1;
                if hindsight[i] > 0.0 {
                    ratio_sum += mean_mlu / hindsight[i];
                    ratio_n += 1;
                }
                experiences.push(Experience { state, action, reward });
            }
            lr = reinforce_update(&mut model, &experiences)?.learning_rate;
            updates += 1;
        }
        let stats = EpochStats {
            epoch,
            mean_reward: reward_sum / count as f64,
            mean_mlu_ratio: if ratio_n > 0 { ratio_sum / ratio_n as f64 } else { f64::NAN },
            learning_rate: lr,
            updates,
        };
        log::debug!(
            "epoch {epoch}: reward {:.4} ratio {:.4}",
            stats.mean_reward,
            stats.mean_mlu_ratio
        );
        curve.push(stats);
        if let Some(dir) = checkpoint_dir {
            if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch < cfg.epochs {
                model.save_file(&dir.join(format!("model-epoch{epoch}.ckpt")))?;
            }
        }
    }
    if let Some(dir) = checkpoint_dir {
        model.save_file(&dir.join("model.ckpt"))?;
    }
    Ok(TrainOutcome { model, curve })
}

/// Writes `epoch,mean_reward,mean_mlu_ratio,learning_rate,updates,config_hash`.
pub fn write_learning_curve<W: Write>(curve: &[EpochStats], hash: &str, out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        epoch: usize,
        mean_reward: f64,
        mean_mlu_ratio: f64,
        learning_rate: f64,
        updates: usize,
        config_hash: &'a str,
    }
    write_csv(
        out,
        curve.iter().map(|e| Row {
            epoch: e.epoch,
            mean_reward: e.mean_reward,
            mean_mlu_ratio: e.mean_mlu_ratio,
            learning_rate: e.learning_rate,
            updates: e.updates,
            config_hash: hash,
        }),
    )
}

/// First epoch whose trailing 10-epoch mean reward reaches `fraction` of
/// the final mean reward (mean of the last tenth of epochs, at least one).
pub fn epochs_to_converge(curve: &[EpochStats], fraction: f64) -> Option<usize> {
    if curve.is_empty() {
        return None;
    }
    let tail = (curve.len() / 10).max(1);
    let final_reward = curve[curve.len() - tail..].iter().map(|e| e.mean_reward).sum::<f64>() / tail as f64;
    let smooth = 10.min(curve.len());
    (smooth - 1..curve.len())
        .find(|&i| {
            let m = curve[i + 1 - smooth..=i].iter().map(|e| e.mean_reward).sum::<f64>() / smooth as f64;
            m >= fraction * final_reward
        })
        .map(|i| curve[i].epoch)
}
