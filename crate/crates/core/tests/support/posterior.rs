//! Quadrature oracles for low-dimensional posterior moments.

use super::integrate;

/// Integration domain for one coordinate, with interior points where the
/// integrand has kinks.
#[derive(Clone, Debug)]
pub enum Domain {
    Finite(f64, f64),
    /// `(a, inf)`.
    Above(f64),
    Real,
}

fn piece(f: &dyn Fn(f64) -> f64, lo: Option<f64>, hi: Option<f64>) -> f64 {
    let clean = |v: f64| if v.is_finite() { v } else { 0.0 };
    match (lo, hi) {
        (Some(a), Some(b)) => integrate(|x| clean(f(x)), a, b),
        (Some(a), None) => integrate(
            |t| {
                let x = a + t / (1.0 - t);
                clean(f(x) / ((1.0 - t) * (1.0 - t)))
            },
            0.0,
            1.0,
        ),
        (None, Some(b)) => integrate(
            |t| {
                let x = b - t / (1.0 - t);
                clean(f(x) / ((1.0 - t) * (1.0 - t)))
            },
            0.0,
            1.0,
        ),
        (None, None) => unreachable!(),
    }
}

/// Integral of `f` over `domain`, split at `breaks`.
pub fn integrate_domain(f: &dyn Fn(f64) -> f64, domain: &Domain, breaks: &[f64]) -> f64 {
    let (lo, hi) = match *domain {
        Domain::Finite(a, b) => (Some(a), Some(b)),
        Domain::Above(a) => (Some(a), None),
        Domain::Real => (None, None),
    };
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&b| lo.is_none_or(|l| b > l) && hi.is_none_or(|h| b < h))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.is_empty() {
        if lo.is_none() && hi.is_none() {
            pts.push(0.0);
        } else {
            return match (lo, hi) {
                (Some(a), Some(b)) => piece(f, Some(a), Some(b)),
                (Some(a), None) => piece(f, Some(a), None),
                _ => unreachable!(),
            };
        }
    }
    let mut total = piece(f, lo, Some(pts[0]));
    for w in pts.windows(2) {
        total += piece(f, Some(w[0]), Some(w[1]));
    }
    total + piece(f, Some(*pts.last().unwrap()), hi)
}

/// Normalized `E[phi_k(x)]` for a one-dimensional unnormalized log density.
/// `log_peak` is an upper estimate of the log density used for scaling.
pub fn expectations_1d(
    log_density: &dyn Fn(f64) -> f64,
    domain: &Domain,
    breaks: &[f64],
    log_peak: f64,
    functions: &[&dyn Fn(f64) -> f64],
) -> Vec<f64> {
    let z = integrate_domain(&|x| (log_density(x) - log_peak).exp(), domain, breaks);
    functions
        .iter()
        .map(|phi| integrate_domain(&|x| phi(x) * (log_density(x) - log_peak).exp(), domain, breaks) / z)
        .collect()
}

/// Two-dimensional version: outer coordinate `a`, inner coordinate `b`.
#[allow(clippy::too_many_arguments)]
pub fn expectations_2d(
    log_density: &dyn Fn(f64, f64) -> f64,
    outer: &Domain,
    outer_breaks: &[f64],
    inner: &Domain,
    inner_breaks: &dyn Fn(f64) -> Vec<f64>,
    log_peak: f64,
    functions: &[&dyn Fn(f64, f64) -> f64],
) -> Vec<f64> {
    let weighted = |phi: &dyn Fn(f64, f64) -> f64| {
        integrate_domain(
            &|a| {
                let br = inner_breaks(a);
                integrate_domain(&|b| phi(a, b) * (log_density(a, b) - log_peak).exp(), inner, &br)
            },
            outer,
            outer_breaks,
        )
    };
    let z = weighted(&|_, _| 1.0);
    functions.iter().map(|phi| weighted(*phi) / z).collect()
}

/// Maximum of a log density over a coarse grid of the box.
pub fn grid_peak_2d(log_density: &dyn Fn(f64, f64) -> f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=400 {
        let x = a.0 + (a.1 - a.0) * i as f64 / 400.0;
        for j in 0..=400 {
            let y = b.0 + (b.1 - b.0) * j as f64 / 400.0;
            let v = log_density(x, y);
            if v.is_finite() {
                best = best.max(v);
            }
        }
    }
    best
}

pub fn grid_peak_1d(log_density: &dyn Fn(f64) -> f64, a: (f64, f64)) -> f64 {
    (0..=20_000)
        .map(|i| log_density(a.0 + (a.1 - a.0) * i as f64 / 20_000.0))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Chi-square goodness-of-fit p-value of iid `draws` against an
/// unnormalized log density. Bin edges are the empirical deciles of the
/// first fifth of the draws; the remaining draws are tested.
pub fn chi_square_gof(draws: &[f64], log_density: &dyn Fn(f64) -> f64, domain: &Domain, breaks: &[f64], log_peak: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let pilot_len = draws.len() / 5;
    let mut pilot = draws[..pilot_len].to_vec();
    pilot.sort_by(f64::total_cmp);
    let bins = 20;
    let edges: Vec<f64> = (1..bins).map(|k| pilot[k * pilot_len / bins]).collect();
    let dens = |x: f64| (log_density(x) - log_peak).exp();
    let mut all_breaks = breaks.to_vec();
    all_breaks.extend(&edges);
    let total = integrate_domain(&dens, domain, &all_breaks);
    let mut probs = Vec::with_capacity(bins);
    let mut acc = 0.0;
    for &e in &edges {
        let below = |x: f64| if x < e { dens(x) } else { 0.0 };
        let mass = integrate_domain(&below, domain, &all_breaks) / total;
        probs.push(mass - acc);
        acc = mass;
    }
    probs.push(1.0 - acc);
    let tested = &draws[pilot_len..];
    let mut counts = vec![0usize; bins];
    for &x in tested {
        counts[edges.partition_point(|&e| e <= x)] += 1;
    }
    let n = tested.len() as f64;
    let stat: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let expected = n * p;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    ChiSquared::new((bins - 1) as f64).unwrap().sf(stat)
}
