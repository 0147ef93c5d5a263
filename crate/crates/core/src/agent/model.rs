use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const LEAKY_SLOPE: f64 = 0.01;
const INIT_RANGE: f64 = 0.05;
const CHECKPOINT_MAGIC: &[u8; 8] = b"RTEPOLCY";
const CHECKPOINT_VERSION: u32 = 1;

/// Layer sizes of a [`PolicyModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    /// Input channels, one per past demand matrix.
    pub channels: usize,
    /// Side of the square input image (node count).
    pub nodes: usize,
    pub filters: usize,
    pub hidden: usize,
    /// One logit per candidate path.
    pub outputs: usize,
}

impl ModelShape {
    pub fn new(channels: usize, nodes: usize, outputs: usize) -> Self {
        ModelShape {
            channels,
            nodes,
            filters: 128,
            hidden: 128,
            outputs,
        }
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.nodes * self.nodes
    }

    fn conv_len(&self) -> usize {
        self.filters * self.nodes * self.nodes
    }

    fn layout(&self) -> Layout {
        let conv_w = 0;
        let conv_b = conv_w + self.filters * self.channels * 9;
        let fc_w = conv_b + self.filters;
        let fc_b = fc_w + self.hidden * self.conv_len();
        let out_w = fc_b + self.hidden;
        let out_b = out_w + self.outputs * self.hidden;
        let total = out_b + self.outputs;
        Layout {
            conv_w,
            conv_b,
            fc_w,
            fc_b,
            out_w,
            out_b,
            total,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.nodes == 0 || self.filters == 0 || self.hidden == 0 || self.outputs == 0 {
            return Err(Error::Shape(format!("degenerate model shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    conv_w: usize,
    conv_b: usize,
    fc_w: usize,
    fc_b: usize,
    out_w: usize,
    out_b: usize,
    total: usize,
}

/// Convolution (3x3, stride 1, zero "same" padding) -> LeakyReLU -> dense ->
/// LeakyReLU -> dense -> softmax over candidate paths.
///
/// All parameters live in one flat vector so gradients, checkpoints and
/// finite-difference checks share a single layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    shape: ModelShape,
    params: Vec<f64>,
    /// Number of updates applied so far; drives the learning-rate schedule.
    pub step: u64,
    /// Entropy regularization weight.
    pub beta: f64,
    /// Fingerprint of the candidate path set the output layer is bound to.
    pub paths_fingerprint: u64,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct Trace {
    input: Vec<f64>,
    conv_pre: Vec<f64>,
    conv_act: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden_act: Vec<f64>,
    pub logits: Vec<f64>,
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl PolicyModel {
    /// Weights drawn uniformly from `[-0.05, 0.05]`.
    pub fn new(shape: ModelShape, beta: f64, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..shape.param_count())
            .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
            .collect();
        Ok(PolicyModel {
            shape,
            params,
            step: 0,
            beta,
            paths_fingerprint: 0,
        })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        let s = self.shape;
        if input.len() != s.input_len() {
            return Err(Error::Shape(format!(
                "state has {} entries, model expects {}",
                input.len(),
                s.input_len()
            )));
        }
        let l = s.layout();
        let p = &self.params;
        let n = s.nodes;
        let nn = n * n;

        let mut conv_pre = vec![0.0; s.conv_len()];
        for f in 0..s.filters {
            let bias = p[l.conv_b + f];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = bias;
                    for ch in 0..s.channels {
                        let w = &p[l.conv_w + (f * s.channels + ch) * 9..][..9];
                        let img = &input[ch * nn..][..nn];
                        for ky in 0..3 {
                            let y = i + ky;
                            if y == 0 || y > n {
                                continue;
                            }
                            for kx in 0..3 {
                                let x = j + kx;
                                if x == 0 || x > n {
                                    continue;
                                }
                                acc += w[ky * 3 + kx] * img[(y - 1) * n + (x - 1)];
                            }
                        }
                    }
                    conv_pre[f * nn + i * n + j] = acc;
                }
            }
        }
        let conv_act: Vec<f64> = conv_pre.iter().map(|&v| leaky(v)).collect();

        let cl = s.conv_len();
        let hidden_pre: Vec<f64> = (0..s.hidden)
            .map(|h| {
                let row = &p[l.fc_w + h * cl..][..cl];
                p[l.fc_b + h] + row.iter().zip(&conv_act).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        let hidden_act: Vec<f64> = hidden_pre.iter().map(|&v| leaky(v)).collect();

        let logits: Vec<f64> = (0..s.outputs)
            .map(|o| {
                let row = &p[l.out_w + o * s.hidden..][..s.hidden];
                p[l.out_b + o] + row.iter().zip(&hidden_act).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();

        Ok(Trace {
            input: input.to_vec(),
            conv_pre,
            conv_act,
            hidden_pre,
            hidden_act,
            logits,
        })
    }

    /// Raw output-layer values before the softmax.
    pub fn logits(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.logits)
    }

    /// Accumulates into `grad` the gradient of `sum_k dlogits[k] * logits[k]`
    /// with respect to the parameters.
    pub(crate) fn backward(&self, trace: &Trace, dlogits: &[f64], grad: &mut [f64]) {
        let s = self.shape;
        let l = s.layout();
        let p = &self.params;
        let n = s.nodes;
        let nn = n * n;
        let cl = s.conv_len();

        let mut d_hidden = vec![0.0; s.hidden];
        for (o, &dz) in dlogits.iter().enumerate() {
            if dz == 0.0 {
                continue;
            }
            grad[l.out_b + o] += dz;
            let base = l.out_w + o * s.hidden;
            for h in 0..s.hidden {
                grad[base + h] += dz * trace.hidden_act[h];
                d_hidden[h] += dz * p[base + h];
            }
        }
        for h in 0..s.hidden {
            d_hidden[h] *= leaky_grad(trace.hidden_pre[h]);
        }

        let mut d_conv = vec![0.0; cl];
        for (h, &dh) in d_hidden.iter().enumerate() {
            if dh == 0.0 {
                continue;
            }
            grad[l.fc_b + h] += dh;
            let base = l.fc_w + h * cl;
            for k in 0..cl {
                grad[base + k] += dh * trace.conv_act[k];
                d_conv[k] += dh * p[base + k];
            }
        }
        for k in 0..cl {
            d_conv[k] *= leaky_grad(trace.conv_pre[k]);
        }

        for f in 0..s.filters {
            for i in 0..n {
                for j in 0..n {
                    let du = d_conv[f * nn + i * n + j];
                    if du == 0.0 {
                        continue;
                    }
                    grad[l.conv_b + f] += du;
                    for ch in 0..s.channels {
                        let wbase = l.conv_w + (f * s.channels + ch) * 9;
                        let img = &trace.input[ch * nn..][..nn];
                        for ky in 0..3 {
                            let y = i + ky;
                            if y == 0 || y > n {
                                continue;
                            }
                            for kx in 0..3 {
                                let x = j + kx;
                                if x == 0 || x > n {
                                    continue;
                                }
                                grad[wbase + ky * 3 + kx] += du * img[(y - 1) * n + (x - 1)];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Writes the versioned little-endian checkpoint.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let s = self.shape;
        for v in [s.channels, s.nodes, s.filters, s.hidden, s.outputs] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        out.write_all(&self.step.to_le_bytes())?;
        out.write_all(&self.beta.to_le_bytes())?;
        out.write_all(&self.paths_fingerprint.to_le_bytes())?;
        out.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for v in &self.params {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a policy checkpoint".into()));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let mut b8 = [0u8; 8];
        let mut next = |input: &mut R| -> Result<[u8; 8]> {
            input.read_exact(&mut b8)?;
            Ok(b8)
        };
        let mut dims = [0usize; 5];
        for d in &mut dims {
            *d = usize::try_from(u64::from_le_bytes(next(&mut input)?))
                .map_err(|_| Error::Checkpoint("dimension overflow".into()))?;
        }
        let shape = ModelShape {
            channels: dims[0],
            nodes: dims[1],
            filters: dims[2],
            hidden: dims[3],
            outputs: dims[4],
        };
        shape.validate()?;
        let step = u64::from_le_bytes(next(&mut input)?);
        let beta = f64::from_le_bytes(next(&mut input)?);
        let paths_fingerprint = u64::from_le_bytes(next(&mut input)?);
        let count = u64::from_le_bytes(next(&mut input)?);
        if count != shape.param_count() as u64 {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {count} parameters, shape needs {}",
                shape.param_count()
            )));
        }
        let mut params = Vec::with_capacity(shape.param_count());
        for _ in 0..count {
            params.push(f64::from_le_bytes(next(&mut input)?));
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::Checkpoint("trailing bytes after parameters".into()));
        }
        Ok(PolicyModel {
            shape,
            params,
            step,
            beta,
            paths_fingerprint,
        })
    }

    pub fn save_file(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.save(std::io::BufWriter::new(f))
    }

    pub fn load_file(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::load(std::io::BufReader::new(f))
    }
}
