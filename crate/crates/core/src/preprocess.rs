//! Phasor-angle preprocessing: center-of-angle removal, unwrapping,
//! deviation from the initial value and linear detrending, in that order.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::signal::{AngleMatrix, Signal};

const TWO_PI: f64 = 2.0 * PI;

/// Inertia-proxy weights for the center of angle. Non-negative, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoaWeights {
    weights: Vec<f64>,
}

impl CoaWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return arg_err("center-of-angle weights must not be empty");
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return arg_err("center-of-angle weights must be finite and non-negative");
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return arg_err(format!("center-of-angle weights sum to {sum}, expected 1"));
        }
        Ok(Self { weights })
    }

    /// Rescales arbitrary non-negative weights (e.g. raw inertia constants).
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return arg_err("weights must have a positive finite sum");
        }
        Self::new(raw.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return arg_err("need at least one bus");
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Removes the weighted average angle from every column.
pub fn subtract_center_of_angle(a: &AngleMatrix, w: &CoaWeights) -> Result<AngleMatrix> {
    if w.len() != a.n_buses() {
        return arg_err(format!(
            "{} weights for {} buses",
            w.len(),
            a.n_buses()
        ));
    }
    let steps = a.n_steps();
    let mut coa = vec![0.0; steps];
    for (row, &wi) in a.rows().iter().zip(w.weights()) {
        for (c, v) in coa.iter_mut().zip(row) {
            *c += wi * v;
        }
    }
    let rows = a
        .rows()
        .iter()
        .map(|row| row.iter().zip(&coa).map(|(v, c)| v - c).collect())
        .collect();
    AngleMatrix::new(rows, a.fs())
}

/// Jump counter for phase unwrapping: the current multiple of 2π added.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnwrapState {
    pub k: i64,
}

impl UnwrapState {
    /// Feeds one raw forward difference and returns the offset to add to the
    /// current sample.
    pub fn update(&mut self, diff: f64) -> f64 {
        if diff.abs() >= PI {
            // At least one full turn per detected jump.
            let turns = (diff / TWO_PI).round().abs().max(1.0) as i64;
            self.k -= diff.signum() as i64 * turns;
        }
        TWO_PI * self.k as f64
    }
}

/// Unwraps a phase signal in time so that consecutive differences stay
/// below π in magnitude. The first sample is left as is.
pub fn unwrap(s: &Signal) -> Signal {
    let x = s.samples();
    let mut state = UnwrapState::default();
    let mut out = Vec::with_capacity(x.len());
    out.push(x[0]);
    for w in x.windows(2) {
        let offset = state.update(w[1] - w[0]);
        out.push(w[1] + offset);
    }
    s.with_samples(out).expect("unwrap keeps values finite")
}

/// `out[t] = s[t] - s[0]`.
pub fn deviation(s: &Signal) -> Signal {
    let x0 = s.samples()[0];
    s.with_samples(s.samples().iter().map(|v| v - x0).collect())
        .expect("finite input gives finite deviation")
}

/// Least-squares intercept and slope against the sample index.
pub fn linear_fit(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (i, v) in x.iter().enumerate() {
        let dt = i as f64 - t_mean;
        sxy += dt * (v - x_mean);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (x_mean - slope * t_mean, slope)
}

/// Subtracts the least-squares line.
pub fn detrend_linear(s: &Signal) -> Signal {
    let x = s.samples();
    let n = x.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = x.iter().sum::<f64>() / n;
    let (_, slope) = linear_fit(x);
    let out = x
        .iter()
        .enumerate()
        .map(|(i, v)| v - x_mean - slope * (i as f64 - t_mean))
        .collect();
    s.with_samples(out).expect("finite input gives finite residual")
}

/// Full preprocessing chain, one output signal per bus row.
pub fn preprocess_pipeline(a: &AngleMatrix, w: &CoaWeights) -> Result<Vec<Signal>> {
    let centered = subtract_center_of_angle(a, w)?;
    (0..centered.n_buses())
        .map(|i| {
            let s = centered.row_signal(i)?;
            Ok(detrend_linear(&deviation(&unwrap(&s))))
        })
        .collect()
}
