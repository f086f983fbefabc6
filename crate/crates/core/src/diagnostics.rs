//! Output analysis for a single chain: autocorrelation, batch-means
//! standard errors, effective sample size, and side-by-side kernel
//! comparisons.

use serde::Serialize;

use crate::kernel::ChainTrace;
use crate::{Error, Result};

fn centered(x: &[f64]) -> Result<(f64, Vec<f64>, f64)> {
    if x.is_empty() {
        return Err(Error::param("empty series"));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n;
    Ok((mean, c, c0))
}

fn autocovariance(c: &[f64], lag: usize) -> f64 {
    let n = c.len();
    c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
}

/// Autocorrelation at each requested lag, with the biased `1/n`
/// normalization.
pub fn autocorrelation(x: &[f64], lags: &[usize]) -> Result<Vec<f64>> {
    let max = lags.iter().copied().max().unwrap_or(0);
    if x.len() <= max {
        return Err(Error::param(format!("series of length {} is too short for lag {max}", x.len())));
    }
    let (_, c, c0) = centered(x)?;
    if !(c0 > 0.0) {
        return Err(Error::param("autocorrelation of a constant series is undefined"));
    }
    Ok(lags
        .iter()
        .map(|&k| if k == 0 { 1.0 } else { autocovariance(&c, k) / c0 })
        .collect())
}

/// Sample mean and its nonoverlapping batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BatchMeans {
    pub mean: f64,
    pub se: f64,
    pub batches: usize,
    pub batch_size: usize,
    /// The series is constant, so the standard error is zero.
    pub degenerate: bool,
}

pub fn default_batch_count(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Batch means with `batches` equal batches (default `floor(sqrt n)`); a
/// remainder at the end of the series is dropped from the batches but not
/// from the mean.
pub fn batch_means_se(x: &[f64], batches: Option<usize>) -> Result<BatchMeans> {
    let n = x.len();
    let b = batches.unwrap_or_else(|| default_batch_count(n));
    if b < 2 || n < 2 * b {
        return Err(Error::param(format!("{n} draws cannot form {b} batches of size at least 2")));
    }
    let size = n / b;
    let mean = x.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = x.chunks_exact(size).take(b).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var_batch = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    // Var(mean) ~ sigma^2 / n with sigma^2 estimated by size * var_batch.
    let se = (size as f64 * var_batch / n as f64).sqrt();
    let degenerate = x.iter().all(|v| *v == x[0]);
    Ok(BatchMeans {
        mean,
        se,
        batches: b,
        batch_size: size,
        degenerate,
    })
}

/// `n / (1 + 2 sum rho_k)` with the sum truncated by the initial monotone
/// sequence rule on consecutive-pair sums. Capped at `n`.
pub fn effective_sample_size(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n == 1 {
        return Ok(1.0);
    }
    let (_, c, c0) = centered(x)?;
    if !(c0 > 0.0) {
        return Err(Error::param("effective sample size of a constant series is undefined"));
    }
    let rho = |k: usize| if k == 0 { 1.0 } else { autocovariance(&c, k) / c0 };
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let gamma = rho(2 * k) + rho(2 * k + 1);
        if gamma <= 0.0 {
            break;
        }
        let gamma = gamma.min(prev);
        sum_pairs += gamma;
        prev = gamma;
        k += 1;
    }
    let tau = (2.0 * sum_pairs - 1.0).max(1.0 / n as f64);
    Ok((n as f64 / tau).min(n as f64))
}

/// Lag-1 autocorrelation with a batch-means standard error taken over the
/// lag-product series.
pub fn lag_one_autocorrelation(x: &[f64]) -> Result<(f64, f64)> {
    if x.len() < 8 {
        return Err(Error::param("lag-1 standard error needs at least 8 draws"));
    }
    let (_, c, c0) = centered(x)?;
    if !(c0 > 0.0) {
        return Err(Error::param("autocorrelation of a constant series is undefined"));
    }
    let products: Vec<f64> = c.windows(2).map(|w| w[0] * w[1] / c0).collect();
    let bm = batch_means_se(&products, None)?;
    let rho = autocovariance(&c, 1) / c0;
    Ok((rho, bm.se))
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalSummary {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    pub acf: Vec<(usize, f64)>,
}

impl FunctionalSummary {
    pub fn of(name: impl Into<String>, x: &[f64], lags: &[usize]) -> Result<Self> {
        let bm = batch_means_se(x, None)?;
        let constant = bm.degenerate;
        Ok(Self {
            name: name.into(),
            mean: bm.mean,
            se: bm.se,
            ess: if constant { f64::NAN } else { effective_sample_size(x)? },
            acf: if constant {
                lags.iter().map(|&k| (k, f64::NAN)).collect()
            } else {
                lags.iter().copied().zip(autocorrelation(x, lags)?).collect()
            },
        })
    }
}

/// Per-column summaries of a trace.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub draws: usize,
    pub functionals: Vec<FunctionalSummary>,
}

pub fn diagnose_trace(trace: &ChainTrace, lags: &[usize]) -> Result<DiagnosticsReport> {
    let functionals = trace
        .columns()
        .iter()
        .enumerate()
        .map(|(j, name)| FunctionalSummary::of(name.clone(), &trace.column(j), lags))
        .collect::<Result<_>>()?;
    Ok(DiagnosticsReport {
        draws: trace.len(),
        functionals,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelRow {
    pub kernel: String,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    pub lag1: f64,
    pub lag1_se: f64,
}

/// Pairwise comparison of `first` against `second`.
#[derive(Clone, Debug, Serialize)]
pub struct KernelPair {
    pub first: String,
    pub second: String,
    /// Difference of means in units of the combined standard error.
    pub mean_difference_z: f64,
    pub lag1_difference: f64,
    pub lag1_combined_se: f64,
    /// `lag1(first) <= lag1(second) + 2 combined SE`.
    pub first_mixes_no_worse: bool,
    pub ess_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelComparison {
    pub rows: Vec<KernelRow>,
    pub pairs: Vec<KernelPair>,
}

/// Summaries of one functional under several kernels, with every ordered
/// pair compared.
pub fn compare_kernels(series: &[(String, Vec<f64>)]) -> Result<KernelComparison> {
    if let Some((_, first)) = series.first() {
        if series.iter().any(|(_, s)| s.len() != first.len()) {
            return Err(Error::param("compared traces must have equal length"));
        }
    }
    let rows = series
        .iter()
        .map(|(k, x)| {
            let bm = batch_means_se(x, None)?;
            let (lag1, lag1_se) = lag_one_autocorrelation(x)?;
            Ok(KernelRow {
                kernel: k.clone(),
                mean: bm.mean,
                se: bm.se,
                ess: effective_sample_size(x)?,
                lag1,
                lag1_se,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for a in &rows {
        for b in &rows {
            if a.kernel == b.kernel {
                continue;
            }
            let se = a.se.hypot(b.se);
            let lag_se = a.lag1_se.hypot(b.lag1_se);
            pairs.push(KernelPair {
                first: a.kernel.clone(),
                second: b.kernel.clone(),
                mean_difference_z: if se > 0.0 { (a.mean - b.mean) / se } else { 0.0 },
                lag1_difference: a.lag1 - b.lag1,
                lag1_combined_se: lag_se,
                first_mixes_no_worse: a.lag1 <= b.lag1 + 2.0 * lag_se,
                ess_ratio: a.ess / b.ess,
            });
        }
    }
    Ok(KernelComparison { rows, pairs })
}
