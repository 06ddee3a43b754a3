//! Variational mode decomposition.
//!
//! The signal is mirror-extended, transformed once, and the modes are found
//! by alternating updates on the one-sided spectrum:
//!
//! * each mode spectrum is the Wiener-filtered residual
//!   `(f - sum_{i != k} u_i - lambda/2) / (1 + penalty * (nu - omega_k)^2)`,
//! * each center frequency is the power-weighted mean frequency of its mode,
//! * the multiplier `lambda` ascends along the reconstruction residual with
//!   step `tau` (`tau = 0` gives the noise-tolerant variant).
//!
//! Frequencies inside the solver are in cycles per sample, so `penalty` is
//! dimensionless with respect to the sampling rate.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::signal::Signal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// All center frequencies start at DC.
    Zero,
    /// Center frequencies start evenly spread over `[0, fs/2)`.
    UniformSpread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VmdConfig {
    pub k_modes: usize,
    pub bandwidth_penalty: f64,
    pub dual_ascent_step: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub init_scheme: InitScheme,
}

impl Default for VmdConfig {
    fn default() -> Self {
        Self {
            k_modes: 3,
            bandwidth_penalty: 2000.0,
            dual_ascent_step: 0.0,
            tolerance: 1e-7,
            max_iterations: 500,
            init_scheme: InitScheme::UniformSpread,
        }
    }
}

impl VmdConfig {
    pub fn with_modes(k_modes: usize) -> Self {
        Self { k_modes, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_modes == 0 {
            return arg_err("k_modes must be at least 1");
        }
        if !(self.bandwidth_penalty.is_finite() && self.bandwidth_penalty > 0.0) {
            return arg_err("bandwidth_penalty must be positive");
        }
        if !(self.dual_ascent_step.is_finite() && self.dual_ascent_step >= 0.0) {
            return arg_err("dual_ascent_step must be non-negative");
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return arg_err("tolerance must lie in (0, 1)");
        }
        if self.max_iterations == 0 {
            return arg_err("max_iterations must be at least 1");
        }
        Ok(())
    }
}

/// Band-limited modes of one signal with their center frequencies (Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub modes: Vec<Signal>,
    pub center_freqs: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Mode indices ordered by ascending center frequency (stable on ties).
    pub fn frequency_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.center_freqs[a].total_cmp(&self.center_freqs[b]));
        idx
    }
}

/// Solver state kept in the one-sided spectral domain.
struct Spectral {
    /// One-sided spectrum of the mirrored input, bins `0..=m/2`.
    f_hat: Vec<Complex64>,
    /// Bin frequencies in cycles per sample.
    freqs: Vec<f64>,
    /// Extended (mirrored) length.
    m: usize,
    /// Samples prepended by the mirror extension.
    pad: usize,
}

fn mirror_extend(x: &[f64]) -> (Vec<f64>, usize) {
    let n = x.len();
    let h = n / 2;
    let mut out = Vec::with_capacity(n + 2 * h);
    out.extend(x[..h].iter().rev());
    out.extend_from_slice(x);
    out.extend(x[n - h..].iter().rev());
    (out, h)
}

impl Spectral {
    fn new(x: &[f64], planner: &mut FftPlanner<f64>) -> Self {
        let (ext, pad) = mirror_extend(x);
        let m = ext.len();
        let mut buf: Vec<Complex64> = ext.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        planner.plan_fft_forward(m).process(&mut buf);
        let half = m / 2;
        let f_hat = buf[..=half].to_vec();
        let freqs = (0..=half).map(|j| j as f64 / m as f64).collect();
        Self { f_hat, freqs, m, pad }
    }

    /// Back to the time domain: Hermitian completion, inverse FFT, and
    /// removal of the mirrored margins.
    fn to_time(&self, u_hat: &[Complex64], len: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
        let m = self.m;
        let half = m / 2;
        let mut full = vec![Complex64::new(0.0, 0.0); m];
        full[0] = Complex64::new(u_hat[0].re, 0.0);
        for j in 1..=half {
            full[j] = u_hat[j];
            full[m - j] = u_hat[j].conj();
        }
        if m % 2 == 0 {
            full[half] = Complex64::new(u_hat[half].re, 0.0);
        }
        planner.plan_fft_inverse(m).process(&mut full);
        let scale = 1.0 / m as f64;
        full[self.pad..self.pad + len].iter().map(|c| c.re * scale).collect()
    }
}

fn sq_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Augmented-Lagrangian value of the current iterate, in the spectral units
/// the solver works with.
fn objective(
    spec: &Spectral,
    u_hat: &[Vec<Complex64>],
    omega: &[f64],
    lambda: &[Complex64],
    penalty: f64,
) -> f64 {
    let mut bandwidth = 0.0;
    for (u, &w) in u_hat.iter().zip(omega) {
        bandwidth += u
            .iter()
            .zip(&spec.freqs)
            .map(|(c, &nu)| (nu - w) * (nu - w) * c.norm_sqr())
            .sum::<f64>();
    }
    let mut fidelity = 0.0;
    let mut dual = 0.0;
    for j in 0..spec.f_hat.len() {
        let sum: Complex64 = u_hat.iter().map(|u| u[j]).sum();
        fidelity += (spec.f_hat[j] - sum + lambda[j] * 0.5).norm_sqr();
        dual += lambda[j].norm_sqr() * 0.25;
    }
    penalty * bandwidth + fidelity - dual
}

/// Decomposes `s` into `cfg.k_modes` modes.
pub fn decompose(s: &Signal, cfg: &VmdConfig) -> Result<ModeSet> {
    run(s, cfg, false).map(|(m, _)| m)
}

/// Like [`decompose`], also returning the augmented-Lagrangian value after
/// every iteration.
pub fn decompose_traced(s: &Signal, cfg: &VmdConfig) -> Result<(ModeSet, Vec<f64>)> {
    run(s, cfg, true)
}

fn run(s: &Signal, cfg: &VmdConfig, trace: bool) -> Result<(ModeSet, Vec<f64>)> {
    cfg.validate()?;
    let x = s.samples();
    let n = x.len();
    if n < 4 {
        return arg_err(format!("signal length {n} is below the minimum of 4"));
    }
    let k_modes = cfg.k_modes;
    if k_modes > n / 2 {
        return arg_err(format!("{k_modes} modes requested for a signal of length {n}"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite sample in VMD input".into()));
    }

    let mut planner = FftPlanner::new();
    let spec = Spectral::new(x, &mut planner);
    let bins = spec.f_hat.len();
    let zero = Complex64::new(0.0, 0.0);

    let mut omega: Vec<f64> = match cfg.init_scheme {
        InitScheme::Zero => vec![0.0; k_modes],
        InitScheme::UniformSpread => (0..k_modes).map(|k| 0.5 * k as f64 / k_modes as f64).collect(),
    };
    let mut u_hat = vec![vec![zero; bins]; k_modes];
    let mut lambda = vec![zero; bins];
    let mut total = vec![zero; bins];
    let mut trace_values = Vec::new();

    let mut iterations = 0;
    let mut converged = false;
    let mut next = vec![zero; bins];
    while iterations < cfg.max_iterations {
        iterations += 1;
        let mut change = 0.0;
        for k in 0..k_modes {
            let wk = omega[k];
            let prev = &u_hat[k];
            for j in 0..bins {
                let others = total[j] - prev[j];
                let d = spec.freqs[j] - wk;
                next[j] = (spec.f_hat[j] - others - lambda[j] * 0.5) / (1.0 + cfg.bandwidth_penalty * d * d);
            }
            let mut diff = 0.0;
            for j in 0..bins {
                diff += (next[j] - prev[j]).norm_sqr();
                total[j] += next[j] - prev[j];
            }
            change += diff / (sq_norm(prev) + f64::EPSILON);
            std::mem::swap(&mut u_hat[k], &mut next);

            let (num, den) = u_hat[k]
                .iter()
                .zip(&spec.freqs)
                .fold((0.0, 0.0), |(a, b), (c, &nu)| {
                    let p = c.norm_sqr();
                    (a + nu * p, b + p)
                });
            if den > 0.0 {
                omega[k] = (num / den).clamp(0.0, 0.5);
            }
        }
        if cfg.dual_ascent_step > 0.0 {
            for j in 0..bins {
                lambda[j] += (total[j] - spec.f_hat[j]) * cfg.dual_ascent_step;
            }
        }
        // Keep the running sum exact so round-off cannot accumulate.
        for j in 0..bins {
            total[j] = u_hat.iter().map(|u| u[j]).sum();
        }
        if trace {
            trace_values.push(objective(&spec, &u_hat, &omega, &lambda, cfg.bandwidth_penalty));
        }
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let modes = u_hat
        .iter()
        .map(|u| s.with_samples(spec.to_time(u, n, &mut planner)))
        .collect::<Result<Vec<_>>>()?;
    let center_freqs = omega.iter().map(|w| w * s.fs()).collect();
    Ok((
        ModeSet { modes, center_freqs, iterations_used: iterations, converged },
        trace_values,
    ))
}

/// Pointwise sum of all modes.
pub fn reconstruct(m: &ModeSet) -> Result<Signal> {
    let first = m
        .modes
        .first()
        .ok_or_else(|| Error::Argument("cannot reconstruct from an empty mode set".into()))?;
    let len = first.len();
    let mut out = vec![0.0; len];
    for (k, mode) in m.modes.iter().enumerate() {
        if mode.len() != len || mode.fs() != first.fs() {
            return Err(Error::Internal(format!("mode {k} does not match mode 0 in length/rate")));
        }
        for (o, v) in out.iter_mut().zip(mode.samples()) {
            *o += v;
        }
    }
    first.with_samples(out)
}

/// Sum of squared samples.
pub fn mode_energy(u: &Signal) -> f64 {
    u.energy()
}

/// Index of the mode carrying the non-stationary trend: the lowest center
/// frequency (ties go to the lower index).
pub fn trend_mode_index(m: &ModeSet) -> usize {
    m.frequency_order()[0]
}

/// Augmented copy of `s`: decompose, drop the trend-carrying mode, and sum
/// the remaining `K - 1` modes.
pub fn augment(s: &Signal, cfg: &VmdConfig) -> Result<Signal> {
    if cfg.k_modes < 2 {
        return arg_err("augmentation needs at least 2 modes");
    }
    let modes = decompose(s, cfg)?;
    augment_from_modes(&modes)
}

/// Augmentation from an existing decomposition.
pub fn augment_from_modes(m: &ModeSet) -> Result<Signal> {
    if m.len() < 2 {
        return arg_err("augmentation needs at least 2 modes");
    }
    let drop = trend_mode_index(m);
    let kept = ModeSet {
        modes: m
            .modes
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != drop)
            .map(|(_, u)| u.clone())
            .collect(),
        center_freqs: Vec::new(),
        iterations_used: m.iterations_used,
        converged: m.converged,
    };
    reconstruct(&kept)
}
