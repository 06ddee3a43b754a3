//! Confusion metrics, train/test cross-evaluation between original and
//! augmented data, and the training-size sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::encoder::{predict, train, EncoderConfig, EncoderModel, TrainReport};
use crate::error::{arg_err, Result};
use crate::signal::{floor_fraction, stratified_indices};
use crate::{Label, LabeledDataset, Signal};

/// Fraction of each dataset used for training in cross-evaluation.
pub const TRAIN_FRACTION: f64 = 2.0 / 3.0;
/// Decision threshold on the unstable probability.
pub const DEFAULT_DELTA: f64 = 0.5;

/// Confusion counts with the unstable class as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n_tp: usize,
    pub n_tn: usize,
    pub n_fp: usize,
    pub n_fn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.n_tp + self.n_tn + self.n_fp + self.n_fn
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionCounts> {
    if predictions.len() != labels.len() {
        return arg_err(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        ));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (Label::Unstable, Label::Unstable) => c.n_tp += 1,
            (Label::Stable, Label::Stable) => c.n_tn += 1,
            (Label::Unstable, Label::Stable) => c.n_fp += 1,
            (Label::Stable, Label::Unstable) => c.n_fn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// `None` when the evaluation set is empty.
pub fn accuracy(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.n_tp + c.n_tn, c.total())
}

/// `None` when nothing was predicted unstable.
pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.n_tp, c.n_tp + c.n_fp)
}

/// `None` when no sample is unstable.
pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    ratio(c.n_tp, c.n_tp + c.n_fn)
}

/// The three metrics of one evaluation. Undefined values serialize as null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl Metrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        Self { accuracy: accuracy(c), precision: precision(c), recall: recall(c) }
    }
}

/// Renders a metric, spelling out the undefined case.
pub fn format_metric(m: Option<f64>) -> String {
    m.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"))
}

/// Which corpus a cross-evaluation cell trained or tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataRole {
    Original,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCell {
    pub train: DataRole,
    pub test: DataRole,
    pub train_seed: u64,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Four cells in the order (orig, orig), (aug, aug), (orig, aug), (aug, orig).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TstrTrtsTable {
    pub cells: Vec<CrossCell>,
}

impl TstrTrtsTable {
    pub fn cell(&self, train: DataRole, test: DataRole) -> Option<&CrossCell> {
        self.cells.iter().find(|c| c.train == train && c.test == test)
    }
}

/// FNV-1a over sample bits and labels, stable across platforms and builds.
pub fn dataset_fingerprint(d: &LabeledDataset) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for s in d.samples() {
        eat(&s.signal.fs().to_bits().to_le_bytes());
        for v in s.signal.samples() {
            eat(&v.to_bits().to_le_bytes());
        }
        eat(&[s.label.index() as u8]);
    }
    h
}

/// Training seed for a cell: depends on the master seed and the training data,
/// so identical training sets are trained identically.
pub fn derive_train_seed(master: u64, train_set: &LabeledDataset) -> u64 {
    let mut z = master ^ dataset_fingerprint(train_set);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn split_seed(master: u64) -> u64 {
    master ^ 0x7370_6c69_7400_0000
}

/// Trains a fresh model on `train_set` and scores it on `test_set`.
pub fn train_and_evaluate(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    cfg: &EncoderConfig,
) -> Result<(EncoderModel, TrainReport, ConfusionCounts)> {
    let mut model = EncoderModel::new(cfg.clone())?;
    let report = train(&mut model, train_set, cfg)?;
    let counts = evaluate_model(&model, test_set, DEFAULT_DELTA)?;
    Ok((model, report, counts))
}

pub fn evaluate_model(model: &EncoderModel, test_set: &LabeledDataset, delta: f64) -> Result<ConfusionCounts> {
    let signals: Vec<Signal> = test_set.signals().into_iter().cloned().collect();
    let preds = predict(model, &signals, delta)?;
    confusion(&preds, &test_set.labels())
}

/// Cross-evaluation between an original corpus and its augmented counterpart.
///
/// Sample `i` of `augmented` must derive from sample `i` of `original`. Both
/// corpora are split with one shared stratified index partition so no test
/// sample has its counterpart in a training set. One model is trained per
/// training corpus and scored on both test sets.
pub fn tstr_trts(
    original: &LabeledDataset,
    augmented: &LabeledDataset,
    cfg: &EncoderConfig,
) -> Result<TstrTrtsTable> {
    if original.len() != augmented.len() {
        return arg_err(format!(
            "paired corpora differ in size: {} original, {} augmented",
            original.len(),
            augmented.len()
        ));
    }
    if original.is_empty() {
        return arg_err("cannot cross-evaluate empty corpora");
    }
    let (train_idx, test_idx) = stratified_indices(&original.labels(), TRAIN_FRACTION, split_seed(cfg.seed));
    let parts = [original, augmented]
        .map(|d| Ok((d.subset(&train_idx)?, d.subset(&test_idx)?)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let roles = [DataRole::Original, DataRole::Augmented];

    let mut models = Vec::with_capacity(2);
    for (train_set, _) in &parts {
        let seed = derive_train_seed(cfg.seed, train_set);
        let cell_cfg = EncoderConfig { seed, ..cfg.clone() };
        let mut model = EncoderModel::new(cell_cfg.clone())?;
        train(&mut model, train_set, &cell_cfg)?;
        models.push((seed, model));
    }

    let mut cells = Vec::with_capacity(4);
    for (a, b) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
        let (seed, model) = &models[a];
        let counts = evaluate_model(model, &parts[b].1, DEFAULT_DELTA)?;
        cells.push(CrossCell {
            train: roles[a],
            test: roles[b],
            train_seed: *seed,
            counts,
            metrics: Metrics::from_counts(&counts),
        });
    }
    Ok(TstrTrtsTable { cells })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
}

/// Splits `merged` once into a training pool and a fixed held-out set of
/// `test_fraction` of the samples. The pool is returned in dataset order.
pub fn sweep_partition(
    merged: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return arg_err(format!("test fraction must lie in (0, 1), got {test_fraction}"));
    }
    let (pool, test) = stratified_indices(&merged.labels(), 1.0 - test_fraction, split_seed(seed));
    Ok((merged.subset(&pool)?, merged.subset(&test)?))
}

/// Stratified subset of exactly `size` samples, kept in pool order.
pub fn stratified_subset(pool: &LabeledDataset, size: usize, seed: u64) -> Result<LabeledDataset> {
    if size == 0 || size > pool.len() {
        return arg_err(format!("subset size {size} outside 1..={}", pool.len()));
    }
    if size == pool.len() {
        return Ok(pool.clone());
    }
    let fraction = size as f64 / pool.len() as f64;
    let (idx, _) = stratified_indices(&pool.labels(), fraction, seed);
    debug_assert_eq!(idx.len(), floor_fraction(pool.len(), fraction));
    pool.subset(&idx)
}

/// Trains on stratified subsets of growing size and scores each model on the
/// same held-out set.
pub fn data_size_sweep(
    merged: &LabeledDataset,
    sizes: &[usize],
    test_fraction: f64,
    cfg: &EncoderConfig,
) -> Result<Vec<SweepRow>> {
    let (pool, test) = sweep_partition(merged, test_fraction, cfg.seed)?;
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > pool.len()) {
        return arg_err(format!(
            "sweep size {bad} outside 1..={} (training pool after holding out {} samples)",
            pool.len(),
            test.len()
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let subset = stratified_subset(&pool, size, cfg.seed ^ size as u64)?;
        let (_, _, counts) = train_and_evaluate(&subset, &test, cfg)?;
        rows.push(SweepRow { size, counts, metrics: Metrics::from_counts(&counts) });
    }
    Ok(rows)
}

/// CSV with header `size,accuracy,precision,recall`.
pub fn write_sweep_csv(mut w: impl Write, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "size,accuracy,precision,recall")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.size,
            format_metric(r.metrics.accuracy),
            format_metric(r.metrics.precision),
            format_metric(r.metrics.recall)
        )?;
    }
    Ok(())
}
