mod support;

use damcmc::distributions::*;
use damcmc::RngStream;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;
use support::*;

const N: usize = 1_000_000;

fn draws(n: usize, seed: u64, mut f: impl FnMut(&mut RngStream) -> f64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    (0..n).map(|_| f(&mut rng)).collect()
}

/// Checks the first two sample moments against quadrature moments of `pdf`.
fn check_two_moments(label: &str, xs: &[f64], pdf: impl Fn(f64) -> f64 + Copy, lo: f64) {
    let m = moments(xs);
    let m1 = integrate_to_inf(|x| x * pdf(x), lo);
    let m2 = integrate_to_inf(|x| x * x * pdf(x), lo);
    assert_within(&format!("{label} mean"), m.mean, m.mean_se, m1, 3.0);
    assert_within(&format!("{label} second moment"), m.second, m.second_se, m2, 3.0);
}

#[test]
fn inverse_gaussian_moments_and_normalization() {
    let p = InverseGaussianParams::new(1.0, 1.0).unwrap();
    let xs = draws(N, 1, |r| sample_inverse_gaussian(p, r));
    let mean_by_quadrature = integrate_to_inf(|x| x * density_inverse_gaussian(x, p), 0.0);
    assert!((mean_by_quadrature - 1.0).abs() < 1e-8);
    check_two_moments("IG(1,1)", &xs, |x| density_inverse_gaussian(x, p), 0.0);

    let q = InverseGaussianParams::new(2.0, 3.0).unwrap();
    let mass = integrate(|x| density_inverse_gaussian(x, q), 0.0, 200.0);
    assert!((mass - 1.0).abs() < 1e-8, "{mass}");
}

#[test]
fn inverse_gaussian_is_deterministic() {
    let p = InverseGaussianParams::new(2.0, 0.5).unwrap();
    assert_eq!(draws(100, 42, |r| sample_inverse_gaussian(p, r)), draws(100, 42, |r| sample_inverse_gaussian(p, r)));
}

#[test]
fn polya_gamma_means_match_series_oracle() {
    // E[PG(a, 0)] from the gamma series: a / (2 pi^2) * sum 1 / (k - 1/2)^2,
    // summed over 10^4 terms plus the integral tail.
    let series: f64 = (1..=10_000).map(|k| 1.0 / (k as f64 - 0.5).powi(2)).sum::<f64>() + 1.0 / 10_000.0;
    for (a, seed) in [(1.0, 2u64), (2.0, 3)] {
        let p = PolyaGammaParams::new(a, 0.0).unwrap();
        let xs = draws(N, seed, |r| sample_polya_gamma(p, r));
        let m = moments(&xs);
        let oracle = a / (2.0 * PI * PI) * series;
        assert!((oracle - a / 4.0).abs() < 1e-8);
        assert_within(&format!("PG({a},0) mean"), m.mean, m.mean_se, oracle, 3.0);
    }
}

#[test]
fn polya_gamma_tilted_moments_match_density_quadrature() {
    let p = PolyaGammaParams::new(1.0, 2.0).unwrap();
    let pdf = |x: f64| density_polya_gamma(x, p, DEFAULT_DENSITY_TOL).unwrap();
    let xs = draws(N, 4, |r| sample_polya_gamma(p, r));
    check_two_moments("PG(1,2)", &xs, pdf, 0.0);
    assert!((integrate_to_inf(|x| x * pdf(x), 0.0) - (1.0f64).tanh() / 4.0).abs() < 1e-9);
}

#[test]
fn polya_gamma_density_integrates_to_one() {
    for (a, b) in [(1.0, 1.0), (1.0, 0.0), (2.0, 3.0), (3.5, 0.5)] {
        let p = PolyaGammaParams::new(a, b).unwrap();
        let mass = integrate(|x| density_polya_gamma(x, p, DEFAULT_DENSITY_TOL).unwrap(), 0.0, 50.0);
        assert!((mass - 1.0).abs() < 1e-6, "PG({a},{b}) mass {mass}");
    }
}

#[test]
fn polya_gamma_additivity() {
    for (b, seed) in [(0.0, 5u64), (1.5, 6)] {
        let p1 = PolyaGammaParams::new(1.0, b).unwrap();
        let p2 = PolyaGammaParams::new(2.0, b).unwrap();
        let n = 200_000;
        let direct = draws(n, seed, |r| sample_polya_gamma(p2, r));
        let mut other = RngStream::new(seed, 1);
        let summed: Vec<f64> = (0..n)
            .map(|_| sample_polya_gamma(p1, &mut other) + sample_polya_gamma(p1, &mut other))
            .collect();
        let d = ks_statistic(&direct, &summed);
        assert!(d < ks_critical_1pct(n, n), "b={b}: KS {d}");
    }
}

#[test]
fn truncated_normal_half_normal_moments() {
    let xs = draws(N, 7, |r| sample_truncated_normal(0.0, 1.0, Side::Positive, r).unwrap());
    assert!(xs.iter().all(|&x| x > 0.0));
    let pdf = |x: f64| density_truncated_normal(x, 0.0, 1.0, Side::Positive);
    let half_normal_mean = integrate_to_inf(|x| x * pdf(x), 0.0);
    assert!((half_normal_mean - (2.0 / PI).sqrt()).abs() < 1e-10);
    check_two_moments("half normal", &xs, pdf, 0.0);
}

#[test]
fn truncated_normal_shifted_moments_and_mass() {
    let (mu, s2) = (1.3, 2.5);
    let xs = draws(N, 8, |r| -sample_truncated_normal(mu, s2, Side::NonPositive, r).unwrap());
    assert!(xs.iter().all(|&x| x >= 0.0));
    // Reflect: -X is N(-mu, s2) truncated to [0, inf).
    check_two_moments("TN(1.3, 2.5, e=0)", &xs, |x| density_truncated_normal(-x, mu, s2, Side::NonPositive), 0.0);
    let mass = integrate_to_inf(|x| density_truncated_normal(x, mu, s2, Side::Positive), 0.0);
    assert!((mass - 1.0).abs() < 1e-6);
}

#[test]
fn truncated_normal_extreme_tail() {
    let xs = draws(N, 9, |r| sample_truncated_normal(-10.0, 1.0, Side::Positive, r).unwrap());
    assert!(xs.iter().all(|&x| x > 0.0));
}

#[test]
fn truncated_t_moments_and_mass() {
    let (loc, nu) = (-0.7, 6.0);
    let pdf = |x: f64| density_truncated_t(x, loc, nu, Side::Positive).unwrap();
    let mass = integrate_to_inf(pdf, 0.0);
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let xs = draws(N, 10, |r| sample_truncated_t(loc, nu, Side::Positive, r).unwrap());
    check_two_moments("truncated t", &xs, pdf, 0.0);
}

#[test]
fn gig_matches_inverse_gaussian_identity() {
    let (a, b) = (2.0, 3.0);
    let gig = draws(N, 11, |r| sample_generalized_inverse_gaussian(-0.5, a, b, r).unwrap());
    let p = InverseGaussianParams::new((b / a).sqrt(), b).unwrap();
    let ig = draws(N, 12, |r| sample_inverse_gaussian(p, r));
    let (mg, mi) = (moments(&gig), moments(&ig));
    let se = (mg.mean_se.powi(2) + mi.mean_se.powi(2)).sqrt();
    assert_within("GIG(-1/2) vs IG", mg.mean, se, mi.mean, 3.0);
}

#[test]
fn gig_density_and_moments() {
    let pdf = |x: f64| density_generalized_inverse_gaussian(x, 1.0, 2.0, 3.0);
    let mass = integrate_to_inf(pdf, 0.0);
    assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    let xs = draws(N, 13, |r| sample_generalized_inverse_gaussian(1.0, 2.0, 3.0, r).unwrap());
    check_two_moments("GIG(1,2,3)", &xs, pdf, 0.0);
    // The quantile-regression regime: index 1/2 with a tiny b.
    let pdf2 = |x: f64| density_generalized_inverse_gaussian(x, 0.5, 3.0, 0.01);
    assert!((integrate_to_inf(pdf2, 0.0) - 1.0).abs() < 1e-6);
    let ys = draws(N, 14, |r| sample_generalized_inverse_gaussian(0.5, 3.0, 0.01, r).unwrap());
    check_two_moments("GIG(1/2,3,0.01)", &ys, pdf2, 0.0);
}

#[test]
fn gig_is_deterministic() {
    let f = |r: &mut RngStream| sample_generalized_inverse_gaussian(0.3, 1.5, 0.7, r).unwrap();
    assert_eq!(draws(500, 3, f), draws(500, 3, f));
}

#[test]
fn inverse_gamma_moments() {
    let xs = draws(N, 15, |r| sample_inverse_gamma(3.0, 2.0, r).unwrap());
    assert!(xs.iter().all(|&x| x > 0.0));
    let pdf = |x: f64| density_inverse_gamma(x, 3.0, 2.0);
    let mean = integrate_to_inf(|x| x * pdf(x), 0.0);
    assert!((mean - 1.0).abs() < 1e-8);
    let m = moments(&xs);
    assert_within("IGamma(3,2) mean", m.mean, m.mean_se, 1.0, 3.0);
    assert!((integrate_to_inf(pdf, 0.0) - 1.0).abs() < 1e-6);
    // Second moment needs a finite fourth moment for its standard error.
    let ys = draws(N, 16, |r| sample_inverse_gamma(6.0, 2.0, r).unwrap());
    check_two_moments("IGamma(6,2)", &ys, |x| density_inverse_gamma(x, 6.0, 2.0), 0.0);
    assert_eq!(draws(50, 2, |r| sample_inverse_gamma(3.0, 2.0, r).unwrap()), draws(50, 2, |r| sample_inverse_gamma(3.0, 2.0, r).unwrap()));
}

#[test]
fn multivariate_normal_moments() {
    let mut rng = RngStream::new(17, 0);
    let one = DMatrix::from_element(1, 1, 1.0);
    let xs: Vec<f64> = (0..N)
        .map(|_| sample_multivariate_normal(&DVector::zeros(1), &one, Parameterization::Covariance, &mut rng).unwrap()[0])
        .collect();
    let m = moments(&xs);
    assert_within("N(0,1) mean", m.mean, m.mean_se, 0.0, 3.0);
    assert_within("N(0,1) second", m.second, m.second_se, 1.0, 3.0);

    let mean = DVector::from_vec(vec![2.0, -1.0, 0.5]);
    let eye = DMatrix::identity(3, 3);
    let n = 100_000;
    let mut acc = DVector::zeros(3);
    for _ in 0..n {
        acc += sample_multivariate_normal(&mean, &eye, Parameterization::Covariance, &mut rng).unwrap();
    }
    acc /= n as f64;
    for i in 0..3 {
        assert_within("identity-covariance mean", acc[i], 1.0 / (n as f64).sqrt(), mean[i], 3.0);
    }

    let cov = DMatrix::from_row_slice(2, 2, &[1.5, -0.4, -0.4, 0.8]);
    let zero = DVector::zeros(2);
    let samples: Vec<DVector<f64>> = (0..N)
        .map(|_| sample_multivariate_normal(&zero, &cov, Parameterization::Covariance, &mut rng).unwrap())
        .collect();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let prod: Vec<f64> = samples.iter().map(|s| s[i] * s[j]).collect();
        let m = moments(&prod);
        assert_within(&format!("cov[{i}{j}]"), m.mean, m.mean_se, cov[(i, j)], 3.0);
    }
}

#[test]
fn asymmetric_laplace_quantile_and_mixture() {
    let alpha = 0.3;
    let below = integrate_to_inf(|e| density_asymmetric_laplace(-e, alpha), 0.0);
    assert!((below - alpha).abs() < 1e-8, "{below}");
    let total = below + integrate_to_inf(|e| density_asymmetric_laplace(e, alpha), 0.0);
    assert!((total - 1.0).abs() < 1e-6);

    let theta = (1.0 - 2.0 * alpha) / (alpha * (1.0 - alpha));
    let tau2 = 2.0 / (alpha * (1.0 - alpha));
    let eps: f64 = 0.7;
    let mixture = integrate_to_inf(
        |r| {
            let v = r * tau2;
            (-(eps - theta * r).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt() * (-r).exp()
        },
        0.0,
    );
    assert!((mixture - density_asymmetric_laplace(eps, alpha)).abs() < 1e-6);
}
