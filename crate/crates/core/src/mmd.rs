//! Kernel maximum mean discrepancy two-sample test with a Gaussian kernel.
//!
//! Each signal is one observation vector. The biased statistic is checked
//! against the Rademacher bound and the unbiased squared statistic against
//! the asymptotic bound.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg_err, Error, Result};

/// Kernel bandwidth: a fixed value or the pooled median heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

const MEDIAN_HEURISTIC: &str = "median-heuristic";

impl Serialize for Bandwidth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bandwidth::Fixed(v) => s.serialize_f64(*v),
            Bandwidth::MedianHeuristic => s.serialize_str(MEDIAN_HEURISTIC),
        }
    }
}

impl<'de> Deserialize<'de> for Bandwidth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Bandwidth::Fixed(v)),
            Raw::Name(n) if n == MEDIAN_HEURISTIC => Ok(Bandwidth::MedianHeuristic),
            Raw::Name(n) => Err(serde::de::Error::custom(format!(
                "bandwidth must be a number or \"{MEDIAN_HEURISTIC}\", got {n:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub bandwidth_sigma: Bandwidth,
    /// Upper bound on |k(x, y)|; 1 for the Gaussian kernel.
    pub kernel_bound: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { bandwidth_sigma: Bandwidth::MedianHeuristic, kernel_bound: 1.0 }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(s) = self.bandwidth_sigma {
            if !(s.is_finite() && s > 0.0) {
                return arg_err(format!("kernel bandwidth must be positive, got {s}"));
            }
        }
        if !(self.kernel_bound.is_finite() && self.kernel_bound > 0.0) {
            return arg_err(format!("kernel bound must be positive, got {}", self.kernel_bound));
        }
        Ok(())
    }

    /// Resolves the bandwidth for a particular pair of sample sets.
    pub fn sigma_for(&self, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        match self.bandwidth_sigma {
            Bandwidth::Fixed(s) => s,
            Bandwidth::MedianHeuristic => median_heuristic_sigma(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Rejected,
    NotRejected,
}

impl Verdict {
    fn from_test(statistic: f64, threshold: f64) -> Self {
        if statistic >= threshold {
            Verdict::Rejected
        } else {
            Verdict::NotRejected
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Rejected => "rejected",
            Verdict::NotRejected => "not-rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdReport {
    pub mmd_biased: f64,
    pub mmd_unbiased_sq: f64,
    pub rademacher_threshold: f64,
    pub asymptotic_threshold: f64,
    pub alpha: f64,
    pub m: usize,
    pub sigma: f64,
    pub verdict_rademacher: Verdict,
    pub verdict_asymptotic: Verdict,
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_dims(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().or(y.first()).map(Vec::len).unwrap_or(0);
    if x.iter().chain(y).any(|v| v.len() != d) {
        return arg_err("all observations must have the same dimension");
    }
    Ok(d)
}

pub fn rbf_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return arg_err(format!("dimension mismatch: {} vs {}", x.len(), y.len()));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return arg_err(format!("kernel bandwidth must be positive, got {sigma}"));
    }
    Ok(rbf(sq_dist(x, y), sigma))
}

fn rbf(d2: f64, sigma: f64) -> f64 {
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Median pairwise distance over the pooled set divided by sqrt(2), or 1 when
/// every pooled point coincides.
pub fn median_heuristic_sigma(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let mut dists = Vec::with_capacity(pooled.len() * pooled.len().saturating_sub(1) / 2);
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            dists.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 { dists[n / 2] } else { 0.5 * (dists[n / 2 - 1] + dists[n / 2]) };
    if median > 0.0 {
        median / std::f64::consts::SQRT_2
    } else {
        1.0
    }
}

/// Sums of the XX, YY and XY Gram blocks, with and without the diagonals.
struct GramSums {
    xx: f64,
    yy: f64,
    xy: f64,
    xx_diag: f64,
    yy_diag: f64,
}

fn gram_sums(x: &[Vec<f64>], y: &[Vec<f64>], sigma: f64) -> GramSums {
    let block = |a: &[Vec<f64>], b: &[Vec<f64>]| -> f64 {
        a.iter().map(|u| b.iter().map(|v| rbf(sq_dist(u, v), sigma)).sum::<f64>()).sum()
    };
    // Symmetric blocks: off-diagonal pairs once, doubled, plus the diagonal.
    let sym = |a: &[Vec<f64>]| -> (f64, f64) {
        let mut off = 0.0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                off += rbf(sq_dist(&a[i], &a[j]), sigma);
            }
        }
        let diag: f64 = a.iter().map(|u| rbf(sq_dist(u, u), sigma)).sum();
        (2.0 * off + diag, diag)
    };
    let (xx, xx_diag) = sym(x);
    let (yy, yy_diag) = sym(y);
    GramSums { xx, yy, xy: block(x, y), xx_diag, yy_diag }
}

fn validate_sets(x: &[Vec<f64>], y: &[Vec<f64>], min: usize) -> Result<()> {
    if x.len() < min || y.len() < min {
        return arg_err(format!("each sample set needs at least {min} observations"));
    }
    check_dims(x, y).map(|_| ())
}

fn biased_from(g: &GramSums, m: f64, n: f64) -> f64 {
    (g.xx / (m * m) - 2.0 * g.xy / (m * n) + g.yy / (n * n)).max(0.0).sqrt()
}

fn unbiased_from(g: &GramSums, m: f64, n: f64) -> f64 {
    (g.xx - g.xx_diag) / (m * (m - 1.0)) + (g.yy - g.yy_diag) / (n * (n - 1.0)) - 2.0 * g.xy / (m * n)
}

pub fn mmd_biased(x: &[Vec<f64>], y: &[Vec<f64>], k: &KernelConfig) -> Result<f64> {
    k.validate()?;
    validate_sets(x, y, 1)?;
    let g = gram_sums(x, y, k.sigma_for(x, y));
    Ok(biased_from(&g, x.len() as f64, y.len() as f64))
}

pub fn mmd_unbiased_sq(x: &[Vec<f64>], y: &[Vec<f64>], k: &KernelConfig) -> Result<f64> {
    k.validate()?;
    validate_sets(x, y, 2)?;
    let g = gram_sums(x, y, k.sigma_for(x, y));
    Ok(unbiased_from(&g, x.len() as f64, y.len() as f64))
}

fn check_bound_args(m: usize, k: f64, alpha: f64) -> Result<()> {
    if m < 1 {
        return arg_err("sample count must be at least 1");
    }
    if !(k.is_finite() && k > 0.0) {
        return arg_err(format!("kernel bound must be positive, got {k}"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return arg_err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    Ok(())
}

/// Acceptance threshold for the biased statistic.
pub fn rademacher_bound(m: usize, k: f64, alpha: f64) -> Result<f64> {
    check_bound_args(m, k, alpha)?;
    Ok((2.0 * k / m as f64).sqrt() * (1.0 + (2.0 * (1.0 / alpha).ln()).sqrt()))
}

/// Acceptance threshold for the unbiased squared statistic.
pub fn asymptotic_bound(m: usize, k: f64, alpha: f64) -> Result<f64> {
    check_bound_args(m, k, alpha)?;
    Ok(4.0 * k / (m as f64).sqrt() * (1.0 / alpha).ln().sqrt())
}

pub fn two_sample_test(x: &[Vec<f64>], y: &[Vec<f64>], k: &KernelConfig, alpha: f64) -> Result<MmdReport> {
    Ok(two_sample_tests(x, y, k, &[alpha])?.remove(0))
}

/// Runs the test at several levels, sharing one Gram computation.
pub fn two_sample_tests(x: &[Vec<f64>], y: &[Vec<f64>], k: &KernelConfig, alphas: &[f64]) -> Result<Vec<MmdReport>> {
    k.validate()?;
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "the bounds assume equal sample counts, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    validate_sets(x, y, 2)?;
    if alphas.is_empty() {
        return arg_err("no significance levels given");
    }
    let m = x.len();
    let sigma = k.sigma_for(x, y);
    let g = gram_sums(x, y, sigma);
    let biased = biased_from(&g, m as f64, m as f64);
    let unbiased = unbiased_from(&g, m as f64, m as f64);
    alphas
        .iter()
        .map(|&alpha| {
            let rt = rademacher_bound(m, k.kernel_bound, alpha)?;
            let at = asymptotic_bound(m, k.kernel_bound, alpha)?;
            Ok(MmdReport {
                mmd_biased: biased,
                mmd_unbiased_sq: unbiased,
                rademacher_threshold: rt,
                asymptotic_threshold: at,
                alpha,
                m,
                sigma,
                verdict_rademacher: Verdict::from_test(biased, rt),
                verdict_asymptotic: Verdict::from_test(unbiased, at),
            })
        })
        .collect()
}
