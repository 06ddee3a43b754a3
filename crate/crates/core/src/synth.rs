//! Synthetic ringdown corpora with known modal content.
//!
//! Each sample is a primary electromechanical mode near the inter-area
//! frequency, one or two weaker secondary modes, a linear trend and white
//! Gaussian noise. The label comes from the true damping ratio of the mode
//! nearest the target frequency, never from an estimate.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::prony::LabelConfig;
use crate::signal::{Label, LabeledDataset, LabeledSample, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Damped oscillation frequency in Hz.
    pub frequency: f64,
    pub damping_ratio: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl ModeSpec {
    /// Real exponent of the mode, `-zeta * 2 pi f / sqrt(1 - zeta^2)`.
    pub fn sigma(&self) -> f64 {
        let z = self.damping_ratio;
        -z * 2.0 * PI * self.frequency / (1.0 - z * z).sqrt()
    }

    /// Sum of squared envelope values over `len` samples.
    pub fn envelope_energy(&self, len: usize, fs: f64) -> f64 {
        crate::prony::DampedMode { frequency: self.frequency, damping_sigma: self.sigma(), amplitude: self.amplitude, phase: self.phase }
            .envelope_energy(len, fs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownSpec {
    pub modes: Vec<ModeSpec>,
    /// Linear trend, signal units per second.
    pub trend_slope: f64,
    pub noise_sigma: f64,
    pub length: usize,
    pub fs: f64,
    pub seed: u64,
}

impl RingdownSpec {
    fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return arg_err("ringdown length must be at least 2");
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return arg_err("sampling rate must be positive");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return arg_err("noise_sigma must be non-negative");
        }
        for m in &self.modes {
            if !(m.damping_ratio.abs() < 1.0) {
                return arg_err(format!("damping ratio {} must lie in (-1, 1)", m.damping_ratio));
            }
            if !(m.frequency >= 0.0 && m.frequency < self.fs / 2.0) {
                return arg_err(format!("mode frequency {} outside [0, fs/2)", m.frequency));
            }
        }
        Ok(())
    }

    /// Deterministic part of the sample at time `t`.
    pub fn clean_value(&self, t: f64) -> f64 {
        let osc: f64 = self
            .modes
            .iter()
            .map(|m| m.amplitude * (m.sigma() * t).exp() * (2.0 * PI * m.frequency * t + m.phase).cos())
            .sum();
        osc + self.trend_slope * t
    }

    /// Ground-truth mode nearest `target` Hz.
    pub fn nearest_mode(&self, target: f64) -> Option<&ModeSpec> {
        self.modes
            .iter()
            .min_by(|a, b| (a.frequency - target).abs().total_cmp(&(b.frequency - target).abs()))
    }

    /// Upper bound on `|x(t)|` over the record, noise taken at 6 sigma.
    pub fn amplitude_bound(&self) -> f64 {
        let t_end = (self.length - 1) as f64 / self.fs;
        let osc: f64 = self.modes.iter().map(|m| m.amplitude.abs() * (m.sigma().abs() * t_end).exp()).sum();
        osc + self.trend_slope.abs() * t_end + 6.0 * self.noise_sigma
    }
}

/// One generated ringdown with its ground-truth label.
pub fn gen_ringdown(spec: &RingdownSpec, labels: &LabelConfig) -> Result<LabeledSample> {
    spec.validate()?;
    if spec.modes.iter().all(|m| m.amplitude == 0.0) {
        return Err(Error::Data("all mode amplitudes are zero; degenerate ringdown".into()));
    }
    let truth = spec
        .nearest_mode(labels.target_frequency)
        .ok_or_else(|| Error::Data("ringdown has no modes".into()))?;
    let label = if truth.damping_ratio >= labels.damping_ratio_threshold { Label::Stable } else { Label::Unstable };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Argument(e.to_string()))?;
    let values = (0..spec.length)
        .map(|n| {
            let t = n as f64 / spec.fs;
            let e = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            spec.clean_value(t) + e
        })
        .collect();
    Ok(LabeledSample::new(Signal::new(values, spec.fs)?, label))
}

/// Parameter ranges for randomized corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub length: usize,
    pub fs: f64,
    pub primary_freq: [f64; 2],
    pub primary_amplitude: [f64; 2],
    pub stable_zeta: [f64; 2],
    pub unstable_zeta: [f64; 2],
    pub secondary_freq: [f64; 2],
    pub secondary_zeta: [f64; 2],
    /// Secondary amplitude as a fraction of the primary amplitude.
    pub secondary_ratio: [f64; 2],
    /// Minimum spacing between a secondary mode and the primary (Hz).
    pub secondary_gap: f64,
    /// Cap on each secondary's envelope energy over the window, as a fraction
    /// of the primary's, so the primary dominates the decomposition.
    pub max_secondary_energy: f64,
    /// Trend slope magnitude range, as a fraction of primary amplitude per
    /// second. The sign is drawn separately.
    pub trend_slope: [f64; 2],
    /// Noise standard deviation as a fraction of primary amplitude.
    pub noise_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            length: 400,
            fs: 60.0,
            primary_freq: [0.6, 1.0],
            primary_amplitude: [0.5, 1.5],
            stable_zeta: [0.06, 0.20],
            unstable_zeta: [-0.02, 0.04],
            secondary_freq: [0.2, 2.0],
            secondary_zeta: [0.05, 0.20],
            secondary_ratio: [0.2, 0.4],
            secondary_gap: 0.5,
            max_secondary_energy: 0.25,
            trend_slope: [0.1, 0.4],
            noise_fraction: 0.01,
        }
    }
}

/// A labeled corpus plus the true parameters of every sample.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: LabeledDataset,
    pub truth: Vec<RingdownSpec>,
}

fn uniform(rng: &mut impl Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        rng.random_range(range[0]..range[1])
    } else {
        range[0]
    }
}

/// Draws the parameters of one sample of the requested class.
pub fn random_spec(rng: &mut impl Rng, cfg: &CorpusConfig, class: Label, target: f64) -> RingdownSpec {
    let fp = uniform(rng, cfg.primary_freq);
    let ap = uniform(rng, cfg.primary_amplitude);
    let zeta = match class {
        Label::Stable => uniform(rng, cfg.stable_zeta),
        Label::Unstable => uniform(rng, cfg.unstable_zeta),
    };
    let mut modes = vec![ModeSpec { frequency: fp, damping_ratio: zeta, amplitude: ap, phase: rng.random_range(-PI..PI) }];
    let n_secondary = rng.random_range(1..=2);
    let mut attempts = 0;
    while modes.len() < 1 + n_secondary && attempts < 1000 {
        attempts += 1;
        let f = uniform(rng, cfg.secondary_freq);
        let spaced = modes.iter().all(|m| (m.frequency - f).abs() >= cfg.secondary_gap);
        // The primary must stay the mode nearest the target.
        if !spaced || (f - target).abs() <= (fp - target).abs() {
            continue;
        }
        let m = ModeSpec {
            frequency: f,
            damping_ratio: uniform(rng, cfg.secondary_zeta),
            amplitude: ap * uniform(rng, cfg.secondary_ratio),
            phase: rng.random_range(-PI..PI),
        };
        if m.envelope_energy(cfg.length, cfg.fs) > cfg.max_secondary_energy * modes[0].envelope_energy(cfg.length, cfg.fs) {
            continue;
        }
        modes.push(m);
    }
    RingdownSpec {
        modes,
        trend_slope: ap * uniform(rng, cfg.trend_slope) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        noise_sigma: ap * cfg.noise_fraction,
        length: cfg.length,
        fs: cfg.fs,
        seed: rng.next_u64(),
    }
}

/// `n` samples, of which `round(n * unstable_fraction)` are unstable, in a
/// seeded random order.
pub fn gen_dataset(
    n: usize,
    unstable_fraction: f64,
    seed: u64,
    cfg: &CorpusConfig,
    labels: &LabelConfig,
) -> Result<SyntheticCorpus> {
    if n < 2 {
        return arg_err("need at least 2 samples");
    }
    if !(unstable_fraction > 0.0 && unstable_fraction < 1.0) {
        return arg_err("class balance must lie in (0, 1)");
    }
    let lo = |r: [f64; 2]| r[0].min(r[1]);
    let hi = |r: [f64; 2]| r[0].max(r[1]);
    let th = labels.damping_ratio_threshold;
    if hi(cfg.unstable_zeta) >= th || lo(cfg.stable_zeta) < th {
        return arg_err("class damping ranges must sit on either side of the label threshold");
    }
    let n_unstable = (n as f64 * unstable_fraction).round() as usize;
    let mut classes: Vec<Label> = (0..n).map(|i| if i < n_unstable { Label::Unstable } else { Label::Stable }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    classes.shuffle(&mut rng);

    let mut samples = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for class in classes {
        let spec = random_spec(&mut rng, cfg, class, labels.target_frequency);
        let sample = gen_ringdown(&spec, labels)?;
        debug_assert_eq!(sample.label, class);
        samples.push(sample);
        truth.push(spec);
    }
    Ok(SyntheticCorpus { dataset: LabeledDataset::new(samples)?, truth })
}

/// One uniform white-noise signal per input signal, with matching length and
/// rate, drawing values from `[low, high)`.
pub fn uniform_noise_like(like: &[Signal], low: f64, high: f64, seed: u64) -> Result<Vec<Signal>> {
    if !(low.is_finite() && high.is_finite() && low < high) {
        return arg_err(format!("noise range [{low}, {high}) is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    like.iter()
        .map(|s| Signal::new((0..s.len()).map(|_| rng.random_range(low..high)).collect(), s.fs()))
        .collect()
}
