#![allow(dead_code)]

pub mod fixtures;
pub mod posterior;

/// Integral over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    quadrature::integrate(f, a, b, 1e-12).integral
}

/// Integral over `(a, inf)` via `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    integrate(
        |t| {
            let x = a + t / (1.0 - t);
            let v = f(x) / ((1.0 - t) * (1.0 - t));
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
    )
}

pub struct Moments {
    pub mean: f64,
    pub mean_se: f64,
    pub second: f64,
    pub second_se: f64,
}

pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let second = sq.iter().sum::<f64>() / n;
    let var2 = sq.iter().map(|x| (x - second).powi(2)).sum::<f64>() / (n - 1.0);
    Moments {
        mean,
        mean_se: (var / n).sqrt(),
        second,
        second_se: (var2 / n).sqrt(),
    }
}

pub fn assert_within(label: &str, estimate: f64, se: f64, exact: f64, k: f64) {
    assert!(
        (estimate - exact).abs() <= k * se,
        "{label}: estimate {estimate} vs exact {exact} differs by {:.2} SE",
        (estimate - exact).abs() / se
    );
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.628 * ((na + nb) / (na * nb)).sqrt()
}
