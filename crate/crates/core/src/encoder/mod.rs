//! Convolutional encoder with channel-split attention.
//!
//! Three blocks of convolution, instance normalization, PReLU, dropout and
//! max pooling feed an attention step: the final map is split by channel,
//! the second half is softmaxed over time and weights the first half, which
//! is then summed over time. A sigmoid dense layer, a normalization across
//! its units and a softmax output layer complete the classifier. Class index
//! 1 is the unstable class.

pub mod layers;

use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::signal::{Label, LabeledDataset, Signal};
use layers::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalePreset {
    Paper,
    Desk,
}

/// Stages inside each convolution block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockOptions {
    pub instance_norm: bool,
    pub prelu: bool,
    /// Drop probability during training; 0 disables dropout.
    pub dropout: f64,
    pub max_pool: bool,
}

impl Default for BlockOptions {
    fn default() -> Self {
        Self { instance_norm: true, prelu: true, dropout: 0.2, max_pool: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub scale_preset: ScalePreset,
    pub filters: [usize; 3],
    pub kernel_sizes: [usize; 3],
    pub classes: usize,
    /// Channel index at which the final feature map is split.
    pub attention_split: usize,
    /// Width of the sigmoid dense layer.
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub blocks: BlockOptions,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self::preset(ScalePreset::Paper)
    }
}

impl EncoderConfig {
    pub fn preset(scale: ScalePreset) -> Self {
        let (filters, learning_rate) = match scale {
            ScalePreset::Paper => ([128, 256, 512], 1e-5),
            ScalePreset::Desk => ([16, 32, 64], 1e-3),
        };
        Self {
            scale_preset: scale,
            filters,
            kernel_sizes: [5, 11, 21],
            classes: 2,
            attention_split: filters[2] / 2,
            hidden_units: filters[2] / 2,
            learning_rate,
            epochs: 30,
            batch_size: 16,
            seed: 0,
            blocks: BlockOptions::default(),
        }
    }

    pub fn desk() -> Self {
        Self::preset(ScalePreset::Desk)
    }

    pub fn validate(&self) -> Result<()> {
        if self.filters.iter().any(|&f| f == 0) {
            return arg_err("filter counts must be positive");
        }
        if self.kernel_sizes.iter().any(|&k| k % 2 == 0) {
            return arg_err(format!("kernel sizes must be odd, got {:?}", self.kernel_sizes));
        }
        if self.filters[2] % 2 != 0 || self.attention_split != self.filters[2] / 2 {
            return arg_err("attention_split must be half of the final filter count");
        }
        if self.classes < 2 {
            return arg_err("need at least 2 classes");
        }
        if self.hidden_units < 2 {
            return arg_err("hidden_units must be at least 2");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return arg_err("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return arg_err("batch size must be positive");
        }
        if !(0.0..1.0).contains(&self.blocks.dropout) {
            return arg_err("dropout must lie in [0, 1)");
        }
        Ok(())
    }

    /// Shortest accepted input length.
    pub fn min_input_len(&self) -> usize {
        let k = *self.kernel_sizes.iter().max().unwrap_or(&1);
        if self.blocks.max_pool {
            k.max(8)
        } else {
            k
        }
    }

    fn same_architecture(&self, other: &Self) -> bool {
        self.filters == other.filters
            && self.kernel_sizes == other.kernel_sizes
            && self.classes == other.classes
            && self.attention_split == other.attention_split
            && self.hidden_units == other.hidden_units
            && self.blocks.instance_norm == other.blocks.instance_norm
            && self.blocks.prelu == other.blocks.prelu
            && self.blocks.max_pool == other.blocks.max_pool
    }
}

/// A named parameter tensor stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// Positions of each block's tensors in the parameter list.
#[derive(Debug, Clone, Copy)]
struct BlockSlots {
    w: usize,
    b: usize,
    norm: Option<(usize, usize)>,
    prelu: Option<usize>,
}

#[derive(Debug, Clone)]
struct Layout {
    blocks: [BlockSlots; 3],
    dense_w: usize,
    dense_b: usize,
    head_gamma: usize,
    head_beta: usize,
    out_w: usize,
    out_b: usize,
}

fn layout_of(cfg: &EncoderConfig) -> Layout {
    let mut next = 0;
    let mut take = || {
        next += 1;
        next - 1
    };
    let mut blocks = [BlockSlots { w: 0, b: 0, norm: None, prelu: None }; 3];
    for slots in &mut blocks {
        slots.w = take();
        slots.b = take();
        slots.norm = cfg.blocks.instance_norm.then(|| (take(), take()));
        slots.prelu = cfg.blocks.prelu.then(&mut take);
    }
    Layout {
        blocks,
        dense_w: take(),
        dense_b: take(),
        head_gamma: take(),
        head_beta: take(),
        out_w: take(),
        out_b: take(),
    }
}

/// Names and shapes of every parameter tensor, in layout order.
fn tensor_shapes(cfg: &EncoderConfig) -> Vec<(String, Vec<usize>)> {
    let mut shapes = Vec::new();
    let mut inp = 1;
    for i in 0..3 {
        let f = cfg.filters[i];
        shapes.push((format!("conv{i}.weight"), vec![f, inp, cfg.kernel_sizes[i]]));
        shapes.push((format!("conv{i}.bias"), vec![f]));
        if cfg.blocks.instance_norm {
            shapes.push((format!("norm{i}.gamma"), vec![f]));
            shapes.push((format!("norm{i}.beta"), vec![f]));
        }
        if cfg.blocks.prelu {
            shapes.push((format!("prelu{i}.alpha"), vec![f]));
        }
        inp = f;
    }
    let (split, h, c) = (cfg.attention_split, cfg.hidden_units, cfg.classes);
    shapes.push(("dense.weight".into(), vec![h, split]));
    shapes.push(("dense.bias".into(), vec![h]));
    shapes.push(("head_norm.gamma".into(), vec![h]));
    shapes.push(("head_norm.beta".into(), vec![h]));
    shapes.push(("output.weight".into(), vec![c, h]));
    shapes.push(("output.bias".into(), vec![c]));
    shapes
}

/// Gradients aligned with the model's parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    fn zeros_like(params: &[Tensor]) -> Self {
        Gradients(params.iter().map(|t| vec![0.0; t.data.len()]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub params: Vec<Tensor>,
    pub adam: AdamState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    /// Accuracy of the predictions made during each training epoch.
    pub epoch_accuracy: Vec<f64>,
    pub checksum: String,
}

struct BlockCache {
    input: Vec<f64>,
    in_ch: usize,
    len: usize,
    pre_act: Vec<f64>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    mask: Option<Vec<f64>>,
    pool_arg: Option<Vec<usize>>,
}

struct Cache {
    blocks: Vec<BlockCache>,
    top: Vec<f64>,
    top_len: usize,
    att: Vec<f64>,
    z: Vec<f64>,
    hidden: Vec<f64>,
    head_hat: Vec<f64>,
    head_inv_std: Vec<f64>,
    head_out: Vec<f64>,
    probs: Vec<f64>,
}

impl EncoderModel {
    /// Seeded uniform fan-in initialization.
    pub fn new(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let layout = layout_of(&config);
        let shapes = tensor_shapes(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params: Vec<Tensor> = shapes
            .into_iter()
            .map(|(name, shape)| {
                let n = shape.iter().product();
                Tensor { name, shape, data: vec![0.0; n] }
            })
            .collect();
        let mut fill = |t: &mut Tensor, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut t.data {
                *v = rng.random_range(-bound..bound);
            }
        };
        for slots in layout.blocks {
            let shape = params[slots.w].shape.clone();
            fill(&mut params[slots.w], shape[1] * shape[2]);
            if let Some((g, _)) = slots.norm {
                params[g].data.fill(1.0);
            }
            if let Some(a) = slots.prelu {
                params[a].data.fill(0.25);
            }
        }
        fill(&mut params[layout.dense_w], config.attention_split);
        params[layout.head_gamma].data.fill(1.0);
        fill(&mut params[layout.out_w], config.hidden_units);
        let zeros: Vec<Vec<f64>> = params.iter().map(|t| vec![0.0; t.data.len()]).collect();
        let adam = AdamState { beta1: 0.9, beta2: 0.999, epsilon: 1e-8, step: 0, m: zeros.clone(), v: zeros };
        Ok(Self { config, params, adam })
    }

    fn layout(&self) -> Layout {
        layout_of(&self.config)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|t| t.data.len()).sum()
    }

    pub fn checksum(&self) -> String {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in &self.params {
            for v in &t.data {
                v.to_bits().hash(&mut h);
            }
        }
        format!("{:016x}", h.finish())
    }

    fn check_input(&self, len: usize) -> Result<()> {
        let min = self.config.min_input_len();
        if len < min {
            return arg_err(format!("input length {len} is shorter than the receptive field {min}"));
        }
        Ok(())
    }

    fn sample_forward(&self, x: &[f64], mut dropout_rng: Option<&mut ChaCha8Rng>) -> Cache {
        let cfg = &self.config;
        let lay = self.layout();
        let p = &self.params;
        let mut a = x.to_vec();
        let (mut ch, mut len) = (1, x.len());
        let mut blocks = Vec::with_capacity(3);
        for (i, slots) in lay.blocks.iter().enumerate() {
            let (f, k) = (cfg.filters[i], cfg.kernel_sizes[i]);
            let conv = conv_forward(&a, ch, len, &p[slots.w].data, &p[slots.b].data, f, k);
            let (normed, xhat, inv_std) = match slots.norm {
                Some((g, b)) => norm_forward(&conv, f, len, &p[g].data, &p[b].data),
                None => (conv, Vec::new(), Vec::new()),
            };
            let mut act = match slots.prelu {
                Some(s) => prelu_forward(&normed, f, len, &p[s].data),
                None => normed.clone(),
            };
            let rate = cfg.blocks.dropout;
            let mask = match dropout_rng.as_deref_mut() {
                Some(rng) if rate > 0.0 => {
                    let keep = 1.0 / (1.0 - rate);
                    let m: Vec<f64> = (0..act.len()).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
                    for (v, s) in act.iter_mut().zip(&m) {
                        *v *= s;
                    }
                    Some(m)
                }
                _ => None,
            };
            let (out, pool_arg, out_len) = if cfg.blocks.max_pool {
                let (o, arg) = pool_forward(&act, f, len);
                (o, Some(arg), len / 2)
            } else {
                (act, None, len)
            };
            blocks.push(BlockCache { input: a, in_ch: ch, len, pre_act: normed, xhat, inv_std, mask, pool_arg });
            a = out;
            ch = f;
            len = out_len;
        }
        let (z, att) = attention_forward(&a, ch, len, cfg.attention_split);
        let h = cfg.hidden_units;
        let hidden: Vec<f64> =
            dense_forward(&z, &p[lay.dense_w].data, &p[lay.dense_b].data, h).into_iter().map(sigmoid).collect();
        let (head_out, head_hat, head_inv_std) =
            norm_forward(&hidden, 1, h, &[1.0], &[0.0]);
        let affine: Vec<f64> = head_out
            .iter()
            .zip(&p[lay.head_gamma].data)
            .zip(&p[lay.head_beta].data)
            .map(|((v, g), b)| g * v + b)
            .collect();
        let logits = dense_forward(&affine, &p[lay.out_w].data, &p[lay.out_b].data, cfg.classes);
        let probs = softmax(&logits);
        Cache { blocks, top: a, top_len: len, att, z, hidden, head_hat, head_inv_std, head_out: affine, probs }
    }

    /// Accumulates this sample's gradients given d(loss)/d(logits).
    fn sample_backward(&self, cache: &Cache, dlogits: &[f64], grads: &mut Gradients) {
        let cfg = &self.config;
        let lay = self.layout();
        let p = &self.params;
        let g = &mut grads.0;
        let h = cfg.hidden_units;

        let d_affine = {
            let (dw, db) = two_mut(g, lay.out_w, lay.out_b);
            dense_backward(&cache.head_out, &p[lay.out_w].data, cfg.classes, dlogits, dw, db)
        };
        let mut d_hat = vec![0.0; h];
        for i in 0..h {
            g[lay.head_gamma][i] += d_affine[i] * cache.head_hat[i];
            g[lay.head_beta][i] += d_affine[i];
            d_hat[i] = d_affine[i] * p[lay.head_gamma].data[i];
        }
        let (mut dg1, mut db1) = ([0.0], [0.0]);
        let d_hidden = norm_backward(&cache.head_hat, &cache.head_inv_std, 1, h, &[1.0], &d_hat, &mut dg1, &mut db1);
        let d_pre: Vec<f64> = d_hidden.iter().zip(&cache.hidden).map(|(d, s)| d * s * (1.0 - s)).collect();
        let dz = {
            let (dw, db) = two_mut(g, lay.dense_w, lay.dense_b);
            dense_backward(&cache.z, &p[lay.dense_w].data, h, &d_pre, dw, db)
        };
        let mut d = attention_backward(&cache.top, &cache.att, cache.top_len, cfg.attention_split, &dz);

        for (i, slots) in lay.blocks.iter().enumerate().rev() {
            let bc = &cache.blocks[i];
            let (f, k) = (cfg.filters[i], cfg.kernel_sizes[i]);
            if let Some(arg) = &bc.pool_arg {
                d = pool_backward(arg, f * bc.len, &d);
            }
            if let Some(mask) = &bc.mask {
                for (v, m) in d.iter_mut().zip(mask) {
                    *v *= m;
                }
            }
            if let Some(s) = slots.prelu {
                d = prelu_backward(&bc.pre_act, f, bc.len, &p[s].data, &d, &mut g[s]);
            }
            if let Some((gi, bi)) = slots.norm {
                let (dgam, dbet) = two_mut(g, gi, bi);
                d = norm_backward(&bc.xhat, &bc.inv_std, f, bc.len, &p[gi].data, &d, dgam, dbet);
            }
            let (dw, db) = two_mut(g, slots.w, slots.b);
            d = conv_backward(&bc.input, bc.in_ch, bc.len, &p[slots.w].data, f, k, &d, dw, db);
        }
    }

    fn batch_rows<'a>(&self, x: &'a [Signal]) -> Result<Vec<&'a [f64]>> {
        let len = x.first().map(Signal::len).unwrap_or(0);
        if x.iter().any(|s| s.len() != len) {
            return arg_err("all signals in a batch must have the same length");
        }
        if !x.is_empty() {
            self.check_input(len)?;
        }
        Ok(x.iter().map(Signal::samples).collect())
    }

    /// Class probabilities, one row per signal. Dropout is inactive.
    pub fn forward(&self, x: &[Signal]) -> Result<Vec<Vec<f64>>> {
        let rows = self.batch_rows(x)?;
        Ok(rows.iter().map(|r| self.sample_forward(r, None).probs).collect())
    }

    /// Mean cross-entropy loss and its exact gradient with dropout inactive.
    pub fn backward(&self, x: &[Signal], labels: &[usize]) -> Result<(f64, Gradients)> {
        self.loss_and_grads(x, labels, None).map(|(l, g, _)| (l, g))
    }

    fn loss_and_grads(
        &self,
        x: &[Signal],
        labels: &[usize],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Gradients, Vec<Vec<f64>>)> {
        let rows = self.batch_rows(x)?;
        check_labels(rows.len(), labels, self.config.classes)?;
        let mut grads = Gradients::zeros_like(&self.params);
        let n = rows.len() as f64;
        let mut probs = Vec::with_capacity(rows.len());
        for (r, &y) in rows.iter().zip(labels) {
            let cache = self.sample_forward(r, rng.as_deref_mut());
            let mut dlogits = cache.probs.clone();
            dlogits[y] -= 1.0;
            for v in &mut dlogits {
                *v /= n;
            }
            self.sample_backward(&cache, &dlogits, &mut grads);
            probs.push(cache.probs);
        }
        Ok((loss(&probs, labels)?, grads, probs))
    }

    /// One Adam update. Non-finite gradients leave the model untouched.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.0.len() != self.params.len() || grads.0.iter().zip(&self.params).any(|(g, t)| g.len() != t.data.len()) {
            return arg_err("gradient shapes do not match the model");
        }
        if grads.0.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::Training("non-finite gradient".into()));
        }
        let a = &mut self.adam;
        a.step += 1;
        let t = a.step as i32;
        let c1 = 1.0 - a.beta1.powi(t);
        let c2 = 1.0 - a.beta2.powi(t);
        for ((param, g), (m, v)) in self.params.iter_mut().zip(&grads.0).zip(a.m.iter_mut().zip(a.v.iter_mut())) {
            for i in 0..g.len() {
                m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
                v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                param.data[i] -= lr * mhat / (vhat.sqrt() + a.epsilon);
            }
        }
        Ok(())
    }

    /// Forward pass that also reports the branch taken by every PReLU unit and
    /// max-pool window. The network is smooth in the parameters wherever the
    /// pattern stays fixed, which is what finite-difference checks rely on.
    pub fn forward_traced(&self, x: &[Signal]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let rows = self.batch_rows(x)?;
        let mut probs = Vec::with_capacity(rows.len());
        let mut pattern = Vec::new();
        for r in rows {
            let cache = self.sample_forward(r, None);
            for bc in &cache.blocks {
                if self.config.blocks.prelu {
                    pattern.extend(bc.pre_act.iter().map(|&v| usize::from(v > 0.0)));
                }
                if let Some(arg) = &bc.pool_arg {
                    pattern.extend_from_slice(arg);
                }
            }
            probs.push(cache.probs);
        }
        Ok((probs, pattern))
    }

    /// Probability of the unstable class.
    pub fn unstable_probability(&self, s: &Signal) -> Result<f64> {
        self.check_input(s.len())?;
        Ok(self.sample_forward(s.samples(), None).probs[Label::Unstable.index()])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let model: Self =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad checkpoint: {e}")))?;
        model.config.validate()?;
        let shapes = tensor_shapes(&model.config);
        let ok = shapes.len() == model.params.len()
            && shapes.iter().zip(&model.params).all(|((n, s), t)| {
                *n == t.name && *s == t.shape && t.data.len() == s.iter().product::<usize>()
            })
            && model.adam.m.len() == shapes.len()
            && model.adam.v.len() == shapes.len();
        if !ok {
            return Err(Error::Format("checkpoint tensors do not match its configuration".into()));
        }
        Ok(model)
    }
}

fn two_mut(g: &mut [Vec<f64>], a: usize, b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a < b);
    let (lo, hi) = g.split_at_mut(b);
    (&mut lo[a], &mut hi[0])
}

fn check_labels(n: usize, labels: &[usize], classes: usize) -> Result<()> {
    if labels.len() != n {
        return arg_err(format!("{} labels for {n} samples", labels.len()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        return arg_err(format!("label index {bad} out of range for {classes} classes"));
    }
    Ok(())
}

pub const PROB_FLOOR: f64 = 1e-12;

/// Mean categorical cross entropy, with probabilities clamped to [1e-12, 1].
pub fn loss(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let classes = probs.first().map(Vec::len).unwrap_or(0);
    if probs.iter().any(|p| p.len() != classes) {
        return arg_err("probability rows differ in length");
    }
    check_labels(probs.len(), labels, classes)?;
    if probs.is_empty() {
        return arg_err("empty batch");
    }
    let total: f64 = probs.iter().zip(labels).map(|(p, &y)| -p[y].clamp(PROB_FLOOR, 1.0).ln()).sum();
    Ok(total / probs.len() as f64)
}

/// Stable iff the unstable-class probability is below `delta`.
pub fn classify(model: &EncoderModel, s: &Signal, delta: f64) -> Result<Label> {
    Ok(label_from_probability(model.unstable_probability(s)?, delta))
}

pub fn label_from_probability(p_unstable: f64, delta: f64) -> Label {
    if p_unstable >= delta {
        Label::Unstable
    } else {
        Label::Stable
    }
}

pub fn predict(model: &EncoderModel, signals: &[Signal], delta: f64) -> Result<Vec<Label>> {
    let probs = model.forward(signals)?;
    Ok(probs.iter().map(|p| label_from_probability(p[Label::Unstable.index()], delta)).collect())
}

/// Mini-batch training with seeded shuffling and dropout. Uses the
/// optimization settings of `cfg`, whose architecture must match the model.
pub fn train(model: &mut EncoderModel, d: &LabeledDataset, cfg: &EncoderConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if !cfg.same_architecture(&model.config) {
        return arg_err("training configuration does not match the model architecture");
    }
    let (stable, unstable) = d.class_counts();
    if stable == 0 || unstable == 0 {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    model.config.learning_rate = cfg.learning_rate;
    model.config.epochs = cfg.epochs;
    model.config.batch_size = cfg.batch_size;
    model.config.seed = cfg.seed;
    model.config.blocks.dropout = cfg.blocks.dropout;
    if let Some(len) = d.sample_len() {
        model.check_input(len)?;
    }

    let signals = d.signals();
    let labels: Vec<usize> = d.labels().iter().map(|l| l.index()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7472_6169_6e00_0000);
    let mut order: Vec<usize> = (0..d.len()).collect();
    let mut report = TrainReport { epoch_loss: Vec::new(), epoch_accuracy: Vec::new(), checksum: String::new() };
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let xb: Vec<Signal> = chunk.iter().map(|&i| signals[i].clone()).collect();
            let yb: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (l, grads, probs) = model.loss_and_grads(&xb, &yb, Some(&mut rng))?;
            if !l.is_finite() {
                return Err(Error::Training("loss became non-finite".into()));
            }
            loss_sum += l * chunk.len() as f64;
            correct += probs
                .iter()
                .zip(&yb)
                .filter(|(p, &y)| argmax(p) == y)
                .count();
            model.adam_step(&grads, cfg.learning_rate)?;
        }
        report.epoch_loss.push(loss_sum / d.len() as f64);
        report.epoch_accuracy.push(correct as f64 / d.len() as f64);
    }
    report.checksum = model.checksum();
    Ok(report)
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

#[cfg(test)]
mod tests;
