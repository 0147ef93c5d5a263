//! Policy-gradient path selection.
//!
//! A [`PolicyModel`] maps the last `c` demand matrices to a distribution over
//! every candidate path. Actions are `R` distinct paths drawn sequentially
//! without replacement; [`safe_guard`] patches in shortest paths for flows
//! left uncovered, and the reward is the reciprocal of the mean MLU the
//! robust-rate program achieves on the following `w` intervals.

mod model;

use std::collections::HashMap;

use rand::Rng;

pub use model::{softmax, ModelShape, PolicyModel};

use crate::dataio::TrafficMatrix;
use crate::error::{Error, Result};
use crate::lp::{solve_robust_rates, RateAllocation};
use crate::netmodel::{CandidatePathSet, FlowPair, Topology};

/// Reward assigned to windows whose robust MLU sum is zero.
pub const REWARD_CAP: f64 = 1e6;

/// How demand volumes are scaled into the input tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalizer {
    /// Divide by a fixed volume, normally the largest demand of the training
    /// trace.
    Fixed(f64),
    /// Divide by the largest entry of the encoded window itself.
    WindowMax,
}

/// The last `c` demand matrices as a `c x N x N` tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub channels: usize,
    pub nodes: usize,
    pub data: Vec<f64>,
}

impl AgentState {
    fn key(&self) -> Vec<u64> {
        self.data.iter().map(|v| v.to_bits()).collect()
    }
}

pub fn encode_state(
    dms: &[TrafficMatrix],
    pairs: &[FlowPair],
    nodes: usize,
    c: usize,
    normalizer: Normalizer,
) -> Result<AgentState> {
    if dms.len() != c {
        return Err(Error::Shape(format!("state needs {c} matrices, got {}", dms.len())));
    }
    let nn = nodes * nodes;
    let mut data = vec![0.0; c * nn];
    for (ch, dm) in dms.iter().enumerate() {
        if dm.demand.len() != pairs.len() {
            return Err(Error::Shape(format!(
                "matrix at t={} has {} entries for {} pairs",
                dm.t,
                dm.demand.len(),
                pairs.len()
            )));
        }
        for (p, &v) in pairs.iter().zip(&dm.demand) {
            if p.src.0 >= nodes || p.dst.0 >= nodes {
                return Err(Error::Shape(format!("pair node index beyond {nodes} nodes")));
            }
            data[ch * nn + p.src.0 * nodes + p.dst.0] = v;
        }
    }
    let scale = match normalizer {
        Normalizer::Fixed(x) => x,
        Normalizer::WindowMax => data.iter().copied().fold(0.0, f64::max),
    };
    if scale > 0.0 {
        data.iter_mut().for_each(|v| *v /= scale);
    }
    Ok(AgentState {
        channels: c,
        nodes,
        data,
    })
}

/// An ordered selection of distinct candidate paths (global indices).
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub paths: Vec<usize>,
    /// Probability of each policy-chosen element at the time it was drawn,
    /// renormalized over the paths still available.
    pub probs: Vec<f64>,
    /// Sum of the log draw probabilities of the policy-chosen elements.
    pub log_prob: f64,
    /// Trailing entries of `paths` appended by [`safe_guard`].
    pub patched: usize,
}

impl Action {
    /// The elements chosen by the policy, excluding guard additions.
    pub fn chosen(&self) -> &[usize] {
        &self.paths[..self.paths.len() - self.patched]
    }
}

/// A single decision with its observed reward.
#[derive(Debug, Clone)]
pub struct Experience {
    pub state: AgentState,
    pub action: Action,
    pub reward: f64,
}

/// Order-sensitive hash of the path ids the output layer indexes.
pub fn paths_fingerprint(cps: &CandidatePathSet) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (_, _, p) in cps.iter() {
        h ^= p.id.0;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn policy_forward(model: &PolicyModel, state: &AgentState) -> Result<Vec<f64>> {
    Ok(softmax(&model.logits(&state.data)?))
}

fn log_sum_exp<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> f64 {
    let m = values.clone().copied().fold(f64::NEG_INFINITY, f64::max);
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Log-probability of drawing `seq` in order without replacement.
pub fn sequence_log_prob(logits: &[f64], seq: &[usize]) -> f64 {
    let mut remaining = vec![true; logits.len()];
    let mut total = 0.0;
    for &a in seq {
        let lse = log_sum_exp(logits.iter().zip(&remaining).filter(|(_, r)| **r).map(|(z, _)| z));
        total += logits[a] - lse;
        remaining[a] = false;
    }
    total
}

fn check_r(r_size: usize, outputs: usize) -> Result<()> {
    if r_size > outputs {
        return Err(Error::Config(format!(
            "cannot select {r_size} paths from {outputs} candidates"
        )));
    }
    Ok(())
}

fn draw_sequence<R: Rng + ?Sized>(logits: &[f64], r_size: usize, temperature: f64, rng: &mut R) -> Vec<usize> {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let mut remaining = vec![true; logits.len()];
    let mut seq = Vec::with_capacity(r_size);
    for _ in 0..r_size {
        let m = scaled
            .iter()
            .zip(&remaining)
            .filter(|(_, r)| **r)
            .map(|(z, _)| *z)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scaled
            .iter()
            .zip(&remaining)
            .map(|(z, r)| if *r { (z - m).exp() } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = None;
        for (k, w) in weights.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            pick = Some(k);
            if u < *w {
                break;
            }
            u -= w;
        }
        let k = pick.expect("at least one path remains");
        remaining[k] = false;
        seq.push(k);
    }
    seq
}

fn action_from_sequence(logits: &[f64], paths: Vec<usize>) -> Action {
    let mut remaining = vec![true; logits.len()];
    let mut probs = Vec::with_capacity(paths.len());
    for &a in &paths {
        let lse = log_sum_exp(logits.iter().zip(&remaining).filter(|(_, r)| **r).map(|(z, _)| z));
        probs.push((logits[a] - lse).exp());
        remaining[a] = false;
    }
    let log_prob = sequence_log_prob(logits, &paths);
    Action {
        paths,
        probs,
        log_prob,
        patched: 0,
    }
}

/// Draws `r_size` distinct paths, renormalizing after each draw.
pub fn sample_action<R: Rng + ?Sized>(
    model: &PolicyModel,
    state: &AgentState,
    r_size: usize,
    rng: &mut R,
) -> Result<Action> {
    sample_action_tempered(model, state, r_size, 1.0, rng)
}

/// As [`sample_action`] with logits divided by `temperature`. The recorded
/// probabilities always refer to the untempered policy.
pub fn sample_action_tempered<R: Rng + ?Sized>(
    model: &PolicyModel,
    state: &AgentState,
    r_size: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<Action> {
    let logits = model.logits(&state.data)?;
    check_r(r_size, logits.len())?;
    if !(temperature > 0.0) {
        return Err(Error::Config("temperature must be positive".into()));
    }
    let seq = draw_sequence(&logits, r_size, temperature, rng);
    Ok(action_from_sequence(&logits, seq))
}

/// The `r_size` most probable paths; ties go to the smaller path id.
pub fn greedy_action(
    model: &PolicyModel,
    state: &AgentState,
    cps: &CandidatePathSet,
    r_size: usize,
) -> Result<Action> {
    let logits = model.logits(&state.data)?;
    if logits.len() != cps.total_paths() {
        return Err(Error::Shape(format!(
            "model has {} outputs for {} candidate paths",
            logits.len(),
            cps.total_paths()
        )));
    }
    check_r(r_size, logits.len())?;
    let probs = softmax(&logits);
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .total_cmp(&probs[a])
            .then(cps.path_at(a).id.cmp(&cps.path_at(b).id))
    });
    order.truncate(r_size);
    Ok(action_from_sequence(&logits, order))
}

/// Appends the shortest candidate path of every pair the action leaves
/// without a path.
pub fn safe_guard(mut action: Action, cps: &CandidatePathSet) -> Action {
    let mut covered = vec![false; cps.pair_count()];
    for &g in &action.paths {
        covered[cps.locate(g).0] = true;
    }
    for (pi, first) in cps.shortest_indices().into_iter().enumerate() {
        if let (false, Some(g)) = (covered[pi], first) {
            action.paths.push(g);
            action.patched += 1;
        }
    }
    action
}

/// Solves the robust rates over the action's paths for the window `dms` and
/// returns `w / sum Z_t` together with the allocation.
pub fn compute_reward(
    topo: &Topology,
    dms: &[TrafficMatrix],
    cps: &CandidatePathSet,
    action: &Action,
) -> Result<(f64, RateAllocation)> {
    let mut selected = action.paths.clone();
    selected.sort_unstable();
    selected.dedup();
    let alloc = solve_robust_rates(topo, dms, &cps.restrict(&selected))?;
    let sum: f64 = alloc.mlu.iter().sum();
    Ok((reward_from_sum(dms.len(), sum), alloc))
}

pub fn reward_from_sum(w: usize, z_sum: f64) -> f64 {
    if z_sum > 0.0 {
        (w as f64 / z_sum).min(REWARD_CAP)
    } else {
        REWARD_CAP
    }
}

/// `max(1e-4, 1e-3 * 0.96^floor(step / 500))`.
pub fn lr_schedule(step: u64) -> f64 {
    let decays = (step / 500).min(i32::MAX as u64) as i32;
    (1e-3 * 0.96f64.powi(decays)).max(1e-4)
}

/// Reward minus the baseline: the mean reward of batch entries with an
/// identical state, or the batch mean when the state occurs once.
pub fn advantages(batch: &[Experience]) -> Vec<f64> {
    if batch.is_empty() {
        return Vec::new();
    }
    let mean = batch.iter().map(|e| e.reward).sum::<f64>() / batch.len() as f64;
    let mut groups: HashMap<Vec<u64>, (f64, usize)> = HashMap::new();
    for e in batch {
        let g = groups.entry(e.state.key()).or_insert((0.0, 0));
        g.0 += e.reward;
        g.1 += 1;
    }
    batch
        .iter()
        .map(|e| {
            let (sum, n) = groups[&e.state.key()];
            let b = if n > 1 { sum / n as f64 } else { mean };
            e.reward - b
        })
        .collect()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>()
}

/// `sum_b A_b log pi(a_b | s_b) + beta H(pi(. | s_b))`.
pub fn surrogate_objective(model: &PolicyModel, batch: &[Experience], adv: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (e, a) in batch.iter().zip(adv) {
        let logits = model.logits(&e.state.data)?;
        total += a * sequence_log_prob(&logits, e.action.chosen());
        total += model.beta * entropy(&softmax(&logits));
    }
    Ok(total)
}

/// Gradient of [`surrogate_objective`] with respect to the flat parameters.
pub fn surrogate_gradient(model: &PolicyModel, batch: &[Experience], adv: &[f64]) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; model.param_count()];
    for (e, &a) in batch.iter().zip(adv) {
        let trace = model.forward_trace(&e.state.data)?;
        let z = &trace.logits;
        let mut dz = vec![0.0; z.len()];
        if a != 0.0 {
            let mut remaining = vec![true; z.len()];
            for &k in e.action.chosen() {
                if k >= z.len() {
                    return Err(Error::Shape(format!("action index {k} beyond {} outputs", z.len())));
                }
                let lse = log_sum_exp(z.iter().zip(&remaining).filter(|(_, r)| **r).map(|(v, _)| v));
                for j in 0..z.len() {
                    if remaining[j] {
                        dz[j] -= a * (z[j] - lse).exp();
                    }
                }
                dz[k] += a;
                remaining[k] = false;
            }
        }
        if model.beta != 0.0 {
            let p = softmax(z);
            let h = entropy(&p);
            for j in 0..z.len() {
                if p[j] > 0.0 {
                    dz[j] -= model.beta * p[j] * (p[j].ln() + h);
                }
            }
        }
        model.backward(&trace, &dz, &mut grad);
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub learning_rate: f64,
    pub mean_reward: f64,
    pub grad_norm: f64,
}

/// One gradient-ascent step on the batch surrogate. The parameters are left
/// untouched when the gradient is not finite.
pub fn reinforce_update(model: &mut PolicyModel, batch: &[Experience]) -> Result<UpdateStats> {
    if batch.is_empty() {
        return Err(Error::Config("empty experience batch".into()));
    }
    let adv = advantages(batch);
    let grad = surrogate_gradient(model, batch, &adv)?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { step: model.step });
    }
    let lr = lr_schedule(model.step);
    for (p, g) in model.params_mut().iter_mut().zip(&grad) {
        *p += lr * g;
    }
    model.step += 1;
    Ok(UpdateStats {
        learning_rate: lr,
        mean_reward: batch.iter().map(|e| e.reward).sum::<f64>() / batch.len() as f64,
        grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
    })
}
