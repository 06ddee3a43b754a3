//! Time-series and dataset types shared by every pipeline stage.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

/// A uniformly sampled, finite, real-valued time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
}

#[derive(Deserialize)]
struct RawSignal {
    samples: Vec<f64>,
    fs: f64,
}

impl TryFrom<RawSignal> for Signal {
    type Error = Error;

    fn try_from(raw: RawSignal) -> Result<Self> {
        Signal::new(raw.samples, raw.fs)
    }
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return arg_err(format!("sampling rate must be positive and finite, got {fs}"));
        }
        if samples.len() < 2 {
            return Err(Error::Data(format!(
                "signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite value at index {i}")));
        }
        Ok(Self { samples, fs })
    }

    pub fn zeros(len: usize, fs: f64) -> Result<Self> {
        Self::new(vec![0.0; len], fs)
    }

    /// Builds a signal by evaluating `f` at `t = n / fs`.
    pub fn from_fn(len: usize, fs: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..len).map(|n| f(n as f64 / fs)).collect(), fs)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample period in seconds.
    pub fn dt(&self) -> f64 {
        1.0 / self.fs
    }

    /// Same sampling rate, new values. Fails if the values are non-finite.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }
}

/// Bus voltage angles in radians: one row per bus, one column per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleMatrix {
    rows: Vec<Vec<f64>>,
    fs: f64,
}

impl AngleMatrix {
    pub fn new(rows: Vec<Vec<f64>>, fs: f64) -> Result<Self> {
        if rows.is_empty() {
            return arg_err("angle matrix needs at least one bus row");
        }
        if !(fs.is_finite() && fs > 0.0) {
            return arg_err(format!("sampling rate must be positive and finite, got {fs}"));
        }
        let width = rows[0].len();
        if width < 2 {
            return Err(Error::Data("angle rows need at least 2 time steps".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Format(format!(
                    "bus row {i} has {} columns, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("non-finite angle in bus row {i}")));
            }
        }
        Ok(Self { rows, fs })
    }

    pub fn n_buses(&self) -> usize {
        self.rows.len()
    }

    pub fn n_steps(&self) -> usize {
        self.rows[0].len()
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row_signal(&self, i: usize) -> Result<Signal> {
        Signal::new(self.rows[i].clone(), self.fs)
    }
}

/// Binary stability class. `Unstable` is the positive class (index 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Stable,
    Unstable,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Stable, Label::Unstable];

    pub fn index(self) -> usize {
        match self {
            Label::Stable => 0,
            Label::Unstable => 1,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Label::Stable),
            1 => Ok(Label::Unstable),
            _ => Err(Error::Label(format!("class index {i} out of range"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Stable => "stable",
            Label::Unstable => "unstable",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stable" => Ok(Label::Stable),
            "unstable" => Ok(Label::Unstable),
            other => Err(Error::Label(format!("unknown label token {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub signal: Signal,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(signal: Signal, label: Label) -> Self {
        Self { signal, label }
    }
}

/// Equal-length, equal-rate labeled samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledDataset {
    samples: Vec<LabeledSample>,
}

impl LabeledDataset {
    pub fn new(samples: Vec<LabeledSample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let (len, fs) = (first.signal.len(), first.signal.fs());
            for (i, s) in samples.iter().enumerate() {
                if s.signal.len() != len {
                    return Err(Error::Format(format!(
                        "sample {i} has length {}, expected {len}",
                        s.signal.len()
                    )));
                }
                if s.signal.fs() != fs {
                    return Err(Error::Format(format!(
                        "sample {i} has fs {}, expected {fs}",
                        s.signal.fs()
                    )));
                }
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<LabeledSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Common sample length, `None` for an empty dataset.
    pub fn sample_len(&self) -> Option<usize> {
        self.samples.first().map(|s| s.signal.len())
    }

    pub fn fs(&self) -> Option<f64> {
        self.samples.first().map(|s| s.signal.fs())
    }

    /// `(stable, unstable)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let unstable = self.samples.iter().filter(|s| s.label == Label::Unstable).count();
        (self.samples.len() - unstable, unstable)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn signals(&self) -> Vec<&Signal> {
        self.samples.iter().map(|s| &s.signal).collect()
    }

    /// Sample values as plain vectors, one per sample.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.signal.samples().to_vec()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut out = Vec::with_capacity(indices.len());
        for &i in indices {
            match self.samples.get(i) {
                Some(s) => out.push(s.clone()),
                None => return arg_err(format!("index {i} out of range for {} samples", self.len())),
            }
        }
        Self::new(out)
    }

    /// Concatenates two datasets with matching length and rate.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        Self::new(samples)
    }
}

/// Stratified, seeded partition into `(train, test)`.
///
/// The first part holds exactly `floor(n * train_fraction)` samples. Per-class
/// quotas are assigned by largest remainder so each class keeps its share.
pub fn split_dataset(
    d: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return arg_err(format!("train fraction must lie in (0, 1), got {train_fraction}"));
    }
    if d.is_empty() {
        return arg_err("cannot split an empty dataset");
    }
    let (train_idx, test_idx) = stratified_indices(&d.labels(), train_fraction, seed);
    Ok((d.subset(&train_idx)?, d.subset(&test_idx)?))
}

/// `floor(n * f)` robust to representation error such as `7878 * (2/3)`.
pub(crate) fn floor_fraction(n: usize, f: f64) -> usize {
    let x = n as f64 * f;
    let r = x.round();
    if (x - r).abs() < 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

pub(crate) fn stratified_indices(labels: &[Label], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let total = floor_fraction(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut by_class: Vec<Vec<usize>> = Label::ALL
        .iter()
        .map(|&c| (0..n).filter(|&i| labels[i] == c).collect())
        .collect();
    for group in &mut by_class {
        group.shuffle(&mut rng);
    }

    let exact: Vec<f64> = by_class.iter().map(|g| g.len() as f64 * fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut assigned: usize = quota.iter().sum();
    let mut order: Vec<usize> = (0..by_class.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    while assigned < total {
        let mut progressed = false;
        for &c in &order {
            if assigned < total && quota[c] < by_class[c].len() {
                quota[c] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    while assigned > total {
        let c = (0..quota.len()).max_by_key(|&c| quota[c]).unwrap_or(0);
        quota[c] -= 1;
        assigned -= 1;
    }

    let mut first = Vec::with_capacity(total);
    let mut second = Vec::with_capacity(n - total);
    for (group, q) in by_class.iter().zip(&quota) {
        first.extend_from_slice(&group[..*q]);
        second.extend_from_slice(&group[*q..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset(labels: &[Label], len: usize) -> LabeledDataset {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| LabeledSample::new(Signal::new(vec![i as f64; len], 60.0).unwrap(), l))
            .collect();
        LabeledDataset::new(samples).unwrap()
    }

    #[test]
    fn signal_rejects_non_finite_and_short() {
        assert!(matches!(Signal::new(vec![0.0, f64::NAN], 60.0), Err(Error::Data(_))));
        assert!(matches!(Signal::new(vec![1.0], 60.0), Err(Error::Data(_))));
        assert!(matches!(Signal::new(vec![1.0, 2.0], 0.0), Err(Error::Argument(_))));
    }

    #[test]
    fn ragged_dataset_is_format_error() {
        let a = LabeledSample::new(Signal::new(vec![0.0; 3], 60.0).unwrap(), Label::Stable);
        let b = LabeledSample::new(Signal::new(vec![0.0; 4], 60.0).unwrap(), Label::Stable);
        assert!(matches!(LabeledDataset::new(vec![a, b]), Err(Error::Format(_))));
    }

    #[test]
    fn split_7878_two_thirds() {
        let labels: Vec<Label> = (0..7878)
            .map(|i| if i % 3 == 0 { Label::Unstable } else { Label::Stable })
            .collect();
        let d = dataset(&labels, 2);
        let (a, b) = split_dataset(&d, 2.0 / 3.0, 1).unwrap();
        assert_eq!(a.len(), 5252);
        assert_eq!(b.len(), 2626);
    }

    #[test]
    fn split_is_deterministic() {
        let labels: Vec<Label> = (0..10).map(|i| Label::from_index(i % 2).unwrap()).collect();
        let d = dataset(&labels, 4);
        let x = split_dataset(&d, 0.5, 42).unwrap();
        let y = split_dataset(&d, 0.5, 42).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn split_is_stratified() {
        let d = dataset(&[Label::Stable, Label::Unstable, Label::Stable, Label::Unstable], 4);
        let (a, b) = split_dataset(&d, 0.5, 3).unwrap();
        assert_eq!(a.class_counts(), (1, 1));
        assert_eq!(b.class_counts(), (1, 1));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = dataset(&[Label::Stable, Label::Unstable], 4);
        assert!(matches!(split_dataset(&d, 0.0, 1), Err(Error::Argument(_))));
        assert!(matches!(split_dataset(&d, 1.0, 1), Err(Error::Argument(_))));
    }

    #[test]
    fn label_tokens() {
        assert_eq!("stable".parse::<Label>().unwrap(), Label::Stable);
        assert_eq!(" unstable".parse::<Label>().unwrap(), Label::Unstable);
        assert!(matches!("maybe".parse::<Label>(), Err(Error::Label(_))));
    }

    proptest::proptest! {
        #[test]
        fn split_partitions(n in 2usize..60, f in 0.05f64..0.95, seed in 0u64..1000, mask in proptest::collection::vec(proptest::bool::ANY, 60)) {
            let labels: Vec<Label> = (0..n).map(|i| if mask[i] { Label::Unstable } else { Label::Stable }).collect();
            let (a, b) = stratified_indices(&labels, f, seed);
            proptest::prop_assert_eq!(a.len(), floor_fraction(n, f));
            let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
            all.sort_unstable();
            proptest::prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
