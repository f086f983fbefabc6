//! Nyström discretization of continuous Markov kernels: spectra, the trace
//! integral `int k(x|x) dx` and the Hilbert-Schmidt integral
//! `int int k(x'|x)^2 f(x) / f(x') dx dx'`, with grid refinement.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::{Error, Result};

/// A transition density with a known (possibly unnormalized) stationary
/// density.
pub trait ContinuousKernel {
    fn density(&self, x: f64, x_next: f64) -> f64;
    fn stationary_density(&self, x: f64) -> f64;
}

/// Standard bivariate normal `(X, Y)` with correlation `rho`. Its DA chain
/// is the autoregression `X' | X ~ N(rho^2 x, 1 - rho^4)`, whose spectrum
/// is `{rho^(2i)}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussianToy {
    rho: f64,
}

impl GaussianToy {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::param(format!("correlation must lie in (-1, 1), got {rho}")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `sum_{i >= 0} rho^(2i)`.
    pub fn exact_trace(&self) -> f64 {
        1.0 / (1.0 - self.rho * self.rho)
    }

    /// `sum_{i >= 0} rho^(4i)`.
    pub fn exact_hilbert_schmidt(&self) -> f64 {
        1.0 / (1.0 - self.rho.powi(4))
    }
}

impl ContinuousKernel for GaussianToy {
    fn density(&self, x: f64, x_next: f64) -> f64 {
        let r2 = self.rho * self.rho;
        let var = 1.0 - r2 * r2;
        let d = x_next - r2 * x;
        (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    fn stationary_density(&self, x: f64) -> f64 {
        (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }
}

/// Midpoint grid of `points` cells on `[lower, upper]`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Grid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower < upper) || points < 3 {
            return Err(Error::param("grid needs lower < upper and at least 3 points"));
        }
        Ok(Self { lower, upper, points })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    pub fn step(&self) -> f64 {
        (self.upper - self.lower) / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.points).map(|i| self.lower + (i as f64 + 0.5) * h).collect()
    }

    fn refined(&self, factor: usize) -> Self {
        Self {
            points: self.points * factor,
            ..*self
        }
    }
}

/// Eigenvalues (descending) of the symmetrized Nyström matrix
/// `sqrt(w_i w_j) sqrt(f_i / f_j) k(x_j | x_i)`, including the trivial one.
pub fn nystrom_eigenvalues<K: ContinuousKernel + ?Sized>(kernel: &K, grid: &Grid) -> Vec<f64> {
    let x = grid.nodes();
    let w = grid.step();
    let f: Vec<f64> = x.iter().map(|&v| kernel.stationary_density(v)).collect();
    let n = x.len();
    let s = DMatrix::from_fn(n, n, |i, j| w * (f[i] / f[j]).sqrt() * kernel.density(x[i], x[j]));
    let sym = 0.5 * (&s + s.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn trace_integral<K: ContinuousKernel + ?Sized>(kernel: &K, grid: &Grid) -> f64 {
    grid.nodes().iter().map(|&x| kernel.density(x, x)).sum::<f64>() * grid.step()
}

pub fn hilbert_schmidt_integral<K: ContinuousKernel + ?Sized>(kernel: &K, grid: &Grid) -> f64 {
    let x = grid.nodes();
    let f: Vec<f64> = x.iter().map(|&v| kernel.stationary_density(v)).collect();
    let w = grid.step();
    let mut total = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            let k = kernel.density(x[i], x[j]);
            if k > 0.0 {
                total += k * k * f[i] / f[j];
            }
        }
    }
    total * w * w
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementLevel {
    pub points: usize,
    pub trace: f64,
    pub hilbert_schmidt: f64,
    /// Leading Nyström eigenvalues, trivial one first.
    pub leading_eigenvalues: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceStatus {
    Converged,
    /// Estimates keep moving by a non-shrinking amount.
    NotTraceClassAtThisResolution,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceSummary {
    pub status: ConvergenceStatus,
    /// `log2(|d1| / |d2|)` from the two successive differences; `None` when
    /// both differences are at rounding level.
    pub observed_order: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactnessReport {
    pub levels: Vec<RefinementLevel>,
    pub trace: ConvergenceSummary,
    pub hilbert_schmidt: ConvergenceSummary,
}

fn summarize(v: [f64; 3]) -> ConvergenceSummary {
    let d1 = (v[1] - v[0]).abs();
    let d2 = (v[2] - v[1]).abs();
    let scale = v[2].abs().max(1.0);
    if !v.iter().all(|x| x.is_finite()) {
        return ConvergenceSummary {
            status: ConvergenceStatus::NotTraceClassAtThisResolution,
            observed_order: None,
        };
    }
    if d1 <= 1e-10 * scale && d2 <= 1e-10 * scale {
        return ConvergenceSummary {
            status: ConvergenceStatus::Converged,
            observed_order: None,
        };
    }
    let order = (d1 / d2).log2();
    let status = if d2 <= 0.5 * d1 || d2 <= 1e-10 * scale {
        ConvergenceStatus::Converged
    } else {
        ConvergenceStatus::NotTraceClassAtThisResolution
    };
    ConvergenceSummary {
        status,
        observed_order: order.is_finite().then_some(order),
    }
}

/// Trace and Hilbert-Schmidt quadratures at `grid`, twice and four times
/// as fine. Divergence is reported in the summary, not as an error.
pub fn compactness_diagnostics<K: ContinuousKernel + ?Sized>(kernel: &K, grid: &Grid, eigenvalues: usize) -> CompactnessReport {
    let levels: Vec<RefinementLevel> = [1, 2, 4]
        .iter()
        .map(|&f| {
            let g = grid.refined(f);
            let mut ev = if eigenvalues > 0 { nystrom_eigenvalues(kernel, &g) } else { Vec::new() };
            ev.truncate(eigenvalues);
            RefinementLevel {
                points: g.points,
                trace: trace_integral(kernel, &g),
                hilbert_schmidt: hilbert_schmidt_integral(kernel, &g),
                leading_eigenvalues: ev,
            }
        })
        .collect();
    let t = [levels[0].trace, levels[1].trace, levels[2].trace];
    let h = [levels[0].hilbert_schmidt, levels[1].hilbert_schmidt, levels[2].hilbert_schmidt];
    CompactnessReport {
        trace: summarize(t),
        hilbert_schmidt: summarize(h),
        levels,
    }
}
