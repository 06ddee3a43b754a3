//! Prony modal fitting and damping-based stability labeling.
//!
//! The fit is the classical three-step pipeline: forward linear prediction
//! solved in least squares, roots of the prediction polynomial (eigenvalues
//! of its companion matrix) as discrete poles, then a Vandermonde least
//! squares solve for the complex amplitudes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::preprocess::detrend_linear;
use crate::signal::{Label, LabeledSample, Signal};
use crate::vmd::{decompose, mode_energy, ModeSet, VmdConfig};

/// Poles with a larger modulus are treated as numerical artifacts.
const MAX_POLE_MODULUS: f64 = 1.5;
/// Relative singular-value floor for the prediction matrix rank test.
const RANK_TOL: f64 = 1e-10;
/// Fitted modes below this share of the total envelope energy are noise.
pub const MIN_ENERGY_SHARE: f64 = 0.05;

/// One damped sinusoid `A e^{sigma t} cos(2 pi f t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedMode {
    pub frequency: f64,
    pub damping_sigma: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl DampedMode {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.damping_sigma * t).exp() * (2.0 * PI * self.frequency * t + self.phase).cos()
    }

    /// Envelope energy `sum_n (A e^{sigma n / fs})^2` over `len` samples.
    pub fn envelope_energy(&self, len: usize, fs: f64) -> f64 {
        let r = (2.0 * self.damping_sigma / fs).exp();
        let a2 = self.amplitude * self.amplitude;
        if (r - 1.0).abs() < 1e-12 {
            a2 * len as f64
        } else {
            a2 * (r.powi(len as i32) - 1.0) / (r - 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Frequency of the mode whose damping decides the label (Hz).
    pub target_frequency: f64,
    /// Samples with a damping ratio at or above this are stable.
    pub damping_ratio_threshold: f64,
    pub prony_order: usize,
    /// Fraction of the IMF dropped from each end before the Prony fit. The
    /// decomposition's boundary handling bends the IMF near both edges.
    pub edge_trim: f64,
    /// Remove a least-squares line before decomposing.
    pub detrend: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { target_frequency: 0.8, damping_ratio_threshold: 0.05, prony_order: 6, edge_trim: 0.15, detrend: true }
    }
}

/// Decomposition settings used for labeling: two modes and a looser
/// bandwidth penalty than the augmentation default, which keeps the dominant
/// IMF close to a single damped sinusoid.
pub fn labeling_vmd_config() -> VmdConfig {
    VmdConfig { k_modes: 2, bandwidth_penalty: 50.0, ..VmdConfig::default() }
}

impl LabelConfig {
    pub fn validate(&self, signal_len: usize) -> Result<()> {
        if !(self.target_frequency.is_finite() && self.target_frequency > 0.0) {
            return arg_err("target_frequency must be positive");
        }
        if !(self.damping_ratio_threshold > 0.0 && self.damping_ratio_threshold < 1.0) {
            return arg_err("damping_ratio_threshold must lie in (0, 1)");
        }
        if !(self.edge_trim >= 0.0 && self.edge_trim < 0.5) {
            return arg_err("edge_trim must lie in [0, 0.5)");
        }
        check_order(self.prony_order, self.trimmed_len(signal_len))
    }

    fn trim_count(&self, len: usize) -> usize {
        (len as f64 * self.edge_trim).floor() as usize
    }

    fn trimmed_len(&self, len: usize) -> usize {
        len - 2 * self.trim_count(len)
    }
}

fn check_order(order: usize, len: usize) -> Result<()> {
    if order < 2 || order % 2 != 0 {
        return arg_err(format!("prony order must be even and at least 2, got {order}"));
    }
    if order > len / 4 {
        return arg_err(format!("prony order {order} exceeds a quarter of the signal length {len}"));
    }
    Ok(())
}

/// Discrete-time poles of the forward linear predictor of `x`.
fn prediction_poles(x: &[f64], order: usize) -> Result<Vec<Complex64>> {
    let rows = x.len() - order;
    let a = DMatrix::from_fn(rows, order, |r, i| x[r + order - 1 - i]);
    let b = DVector::from_fn(rows, |r, _| x[r + order]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * smax).count();
    if smax == 0.0 || rank < order {
        return Err(Error::Fit(format!(
            "prediction matrix has rank {rank}, needs {order}"
        )));
    }
    let coeffs = svd
        .solve(&b, RANK_TOL * smax)
        .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;

    // Companion matrix of z^p - c1 z^{p-1} - ... - cp.
    let mut companion = DMatrix::<f64>::zeros(order, order);
    for i in 0..order {
        companion[(0, i)] = coeffs[i];
    }
    for i in 1..order {
        companion[(i, i - 1)] = 1.0;
    }
    let roots = companion.complex_eigenvalues();
    Ok(roots.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// Least-squares complex amplitudes for the given poles.
fn vandermonde_amplitudes(x: &[f64], poles: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    let mut v = DMatrix::<Complex64>::zeros(n, poles.len());
    for (i, &z) in poles.iter().enumerate() {
        let mut p = Complex64::new(1.0, 0.0);
        for r in 0..n {
            v[(r, i)] = p;
            p *= z;
        }
    }
    // Growing poles make columns differ by many orders of magnitude.
    let scales: Vec<f64> = (0..poles.len()).map(|i| v.column(i).norm()).collect();
    for (i, s) in scales.iter().enumerate() {
        v.column_mut(i).unscale_mut(*s);
    }
    let rhs = DVector::from_fn(n, |r, _| Complex64::new(x[r], 0.0));
    let svd = v.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let h = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::Fit(format!("amplitude solve failed: {e}")))?;
    Ok(h.iter().zip(&scales).map(|(c, s)| c / *s).collect())
}

fn wrap_phase(p: f64) -> f64 {
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}

/// Fits `order` exponentials to `s`; conjugate pole pairs are merged into a
/// single real mode.
pub fn prony_fit(s: &Signal, order: usize) -> Result<Vec<DampedMode>> {
    let x = s.samples();
    check_order(order, x.len())?;
    let poles: Vec<Complex64> = prediction_poles(x, order)?
        .into_iter()
        .filter(|z| z.norm() <= MAX_POLE_MODULUS && z.norm() > 0.0)
        .collect();
    if poles.is_empty() {
        return Err(Error::Fit("no admissible poles".into()));
    }
    let amps = vandermonde_amplitudes(x, &poles)?;
    let fs = s.fs();

    let mut modes = Vec::new();
    for (z, h) in poles.iter().zip(&amps) {
        let sigma = z.norm().ln() * fs;
        let angle = z.arg();
        let real_pole = z.im.abs() <= 1e-12 * z.norm();
        if real_pole {
            let frequency = if z.re > 0.0 { 0.0 } else { fs / 2.0 };
            modes.push(DampedMode { frequency, damping_sigma: sigma, amplitude: h.norm(), phase: wrap_phase(h.arg()) });
        } else if z.im > 0.0 {
            modes.push(DampedMode {
                frequency: angle * fs / (2.0 * PI),
                damping_sigma: sigma,
                amplitude: 2.0 * h.norm(),
                phase: wrap_phase(h.arg()),
            });
        }
    }
    modes.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(modes)
}

/// `zeta = -sigma / sqrt(sigma^2 + (2 pi f)^2)`.
pub fn damping_ratio(m: &DampedMode) -> Result<f64> {
    let omega = 2.0 * PI * m.frequency;
    let mag = m.damping_sigma.hypot(omega);
    if mag == 0.0 {
        return arg_err("damping ratio undefined for a mode with zero frequency and zero damping");
    }
    Ok(-m.damping_sigma / mag)
}

/// The mode with the largest energy; ties resolve to the lower index.
pub fn largest_energy_imf(m: &ModeSet) -> Result<&Signal> {
    let mut best: Option<(usize, f64)> = None;
    for (i, u) in m.modes.iter().enumerate() {
        let e = mode_energy(u);
        if best.map_or(true, |(_, b)| e > b) {
            best = Some((i, e));
        }
    }
    best.map(|(i, _)| &m.modes[i])
        .ok_or_else(|| Error::Argument("empty mode set".into()))
}

/// Everything the labeler derived for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub label: Label,
    pub frequency: f64,
    pub damping_sigma: f64,
    pub damping_ratio: f64,
}

/// Picks the fitted mode nearest the target frequency; fails when none lies
/// within a factor of two of it. Modes carrying less than
/// `MIN_ENERGY_SHARE` of the fitted envelope energy are ignored.
pub fn select_target_mode(modes: &[DampedMode], target: f64, len: usize, fs: f64) -> Result<DampedMode> {
    let energies: Vec<f64> = modes.iter().map(|m| m.envelope_energy(len, fs)).collect();
    let total: f64 = energies.iter().sum();
    let best = modes
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e >= MIN_ENERGY_SHARE * total)
        .map(|(m, _)| m)
        .filter(|m| m.frequency >= target / 2.0 && m.frequency <= 2.0 * target)
        .min_by(|a, b| (a.frequency - target).abs().total_cmp(&(b.frequency - target).abs()))
        .copied();
    best.ok_or_else(|| Error::Label(format!("no fitted mode within [{}, {}] Hz", target / 2.0, 2.0 * target)))
}

/// Decompose, take the dominant IMF, fit it, and threshold the damping ratio
/// of the mode nearest the target frequency.
pub fn label_report(s: &Signal, vmd_cfg: &VmdConfig, lbl_cfg: &LabelConfig) -> Result<LabelReport> {
    lbl_cfg.validate(s.len())?;
    let modes = if lbl_cfg.detrend { decompose(&detrend_linear(s), vmd_cfg)? } else { decompose(s, vmd_cfg)? };
    let imf = largest_energy_imf(&modes)?;
    let cut = lbl_cfg.trim_count(imf.len());
    let core = imf.with_samples(imf.samples()[cut..imf.len() - cut].to_vec())?;
    let fitted = prony_fit(&core, lbl_cfg.prony_order)?;
    let mode = select_target_mode(&fitted, lbl_cfg.target_frequency, core.len(), core.fs())?;
    let zeta = damping_ratio(&mode)?;
    let label = if zeta >= lbl_cfg.damping_ratio_threshold { Label::Stable } else { Label::Unstable };
    Ok(LabelReport { label, frequency: mode.frequency, damping_sigma: mode.damping_sigma, damping_ratio: zeta })
}

pub fn label_sample(s: &Signal, vmd_cfg: &VmdConfig, lbl_cfg: &LabelConfig) -> Result<LabeledSample> {
    let report = label_report(s, vmd_cfg, lbl_cfg)?;
    Ok(LabeledSample::new(s.clone(), report.label))
}
