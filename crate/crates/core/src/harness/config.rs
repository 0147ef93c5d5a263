use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::Scheme;
use crate::dataio::{SynthSpec, TraceFormat};
use crate::error::{Error, Result};

/// Size of the robust path set: a fixed count or calibrated from the
/// MLU-optimal solutions of the training intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RSize {
    Fixed(usize),
    Auto(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl Default for RSize {
    fn default() -> Self {
        RSize::Auto(AutoKeyword::Auto)
    }
}

impl std::str::FromStr for RSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(RSize::default());
        }
        s.parse()
            .map(RSize::Fixed)
            .map_err(|_| Error::Config(format!("r_size must be a count or \"auto\", got {s:?}")))
    }
}

/// Replace link capacities with values drawn uniformly from `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub filters: usize,
    pub hidden: usize,
    /// Entropy regularization weight.
    pub beta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            filters: 128,
            hidden: 128,
            beta: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub init: u64,
    pub sample: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            split: 1,
            init: 2,
            sample: 3,
        }
    }
}

/// Everything an experiment run depends on. Loaded from TOML; relative
/// paths resolve against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: PathBuf,
    pub trace: Option<PathBuf>,
    pub trace_format: TraceFormat,
    /// Interval length of file traces, seconds.
    pub interval_seconds: f64,
    pub synth: Option<SynthSpec>,
    pub capacities: Option<CapacitySpec>,
    /// Demand multiplier.
    pub scale: f64,
    /// Candidate paths per pair.
    pub k: usize,
    pub c: usize,
    pub w: usize,
    pub r_size: RSize,
    pub epochs: usize,
    /// Window starts per epoch; one simulated day when unset.
    pub epoch_length: Option<usize>,
    /// Window starts per update; the whole epoch when unset.
    pub batch_size: Option<usize>,
    /// Actions sampled for each window start.
    pub samples_per_state: usize,
    pub train_fraction: f64,
    /// Save a checkpoint every this many epochs (0 = only at the end).
    pub checkpoint_every: usize,
    pub seeds: Seeds,
    pub schemes: Vec<Scheme>,
    /// Look-ahead windows swept for the per-`w` figures.
    pub w_sweep: Vec<usize>,
    /// History lengths swept for the per-`c` figures.
    pub c_sweep: Vec<usize>,
    pub model: ModelConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: PathBuf::new(),
            trace: None,
            trace_format: TraceFormat::Csv,
            interval_seconds: 300.0,
            synth: None,
            capacities: None,
            scale: 1.0,
            k: 4,
            c: 2,
            w: 2,
            r_size: RSize::default(),
            epochs: 1000,
            epoch_length: None,
            batch_size: None,
            samples_per_state: 1,
            train_fraction: 0.7,
            checkpoint_every: 0,
            seeds: Seeds::default(),
            schemes: Scheme::ALL.to_vec(),
            w_sweep: vec![1, 2, 3],
            c_sweep: vec![1, 2, 3],
            model: ModelConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.topology);
        if let Some(t) = &mut self.trace {
            fix(t);
        }
        fix(&mut self.output_dir);
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.w == 0 || self.c == 0 {
            return bad("w and c must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.schemes.is_empty() {
            return bad("scheme list is empty");
        }
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.samples_per_state == 0 {
            return bad("samples_per_state must be at least 1");
        }
        if matches!(self.epoch_length, Some(0)) || matches!(self.batch_size, Some(0)) {
            return bad("epoch_length and batch_size must be positive");
        }
        if matches!(self.r_size, RSize::Fixed(0)) {
            return bad("r_size must be positive");
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be positive");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must be in (0, 1)");
        }
        if self.w_sweep.contains(&0) || self.c_sweep.contains(&0) {
            return bad("sweep values must be at least 1");
        }
        if self.model.filters == 0 || self.model.hidden == 0 {
            return bad("model layers must be nonempty");
        }
        match (&self.trace, &self.synth) {
            (Some(_), Some(_)) => bad("set either trace or synth, not both"),
            (None, None) => bad("one of trace or synth is required"),
            _ => Ok(()),
        }?;
        if self.topology.as_os_str().is_empty() {
            return bad("topology path is required");
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Epoch length in window starts: one simulated day unless set.
    pub fn epoch_starts(&self, interval_seconds: f64) -> usize {
        self.epoch_length
            .unwrap_or_else(|| ((86_400.0 / interval_seconds).floor() as usize).max(1))
    }
}
