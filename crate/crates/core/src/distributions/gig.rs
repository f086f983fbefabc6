//! Generalized inverse Gaussian GIG(p, a, b), density proportional to
//! `x^(p-1) exp(-(a x + b / x) / 2)`.
//!
//! Sampling follows Hörmann and Leydold's ratio-of-uniforms scheme on the
//! one-parameter form `x^(p-1) exp(-omega (x + 1/x) / 2)` with
//! `omega = sqrt(a b)`: ratio-of-uniforms with mode shift for large `p` or
//! `omega`, without shift in the middle regime, and a dominating
//! three-piece hat when `omega` is small. Negative `p` uses
//! `1 / GIG(-p, b, a)`.

use rand::Rng;

use super::{check_finite, check_positive, sample_gamma};
use crate::{Error, Result};

const ATTEMPT_CAP: usize = 1_000_000;

pub fn sample_generalized_inverse_gaussian<R: Rng + ?Sized>(p: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    check_finite("GIG index", p)?;
    check_positive("GIG a", a)?;
    check_finite("GIG b", b)?;
    if b < 0.0 {
        return Err(Error::param(format!("GIG b must be non-negative, got {b}")));
    }
    if b == 0.0 {
        // Gamma limit, proper only for positive index.
        if p > 0.0 {
            return sample_gamma(p, 0.5 * a, rng);
        }
        return Err(Error::param("GIG with b = 0 requires p > 0"));
    }
    if p < 0.0 {
        return Ok(1.0 / sample_standardized(-p, (a * b).sqrt(), rng)? * (b / a).sqrt());
    }
    Ok(sample_standardized(p, (a * b).sqrt(), rng)? * (b / a).sqrt())
}

fn mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0) + ((lambda - 1.0).powi(2) + omega * omega).sqrt()) / omega
    } else {
        omega / (((1.0 - lambda).powi(2) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

fn sample_standardized<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> Result<f64> {
    if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        small_omega(lambda, omega, rng)
    }
}

fn cap_error() -> Error {
    Error::RejectionCap {
        attempts: ATTEMPT_CAP,
        context: "generalized inverse Gaussian".into(),
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> Result<f64> {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // Roots of the cubic locating the extremes of (x - xm) sqrt(f(x)).
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let pp = b - a * a / 3.0;
    let qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-qq / (2.0 * (-pp * pp * pp / 27.0).sqrt())).acos();
    let fak = 2.0 * (-pp / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    for _ in 0..ATTEMPT_CAP {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return Ok(x);
        }
    }
    Err(cap_error())
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> Result<f64> {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    for _ in 0..ATTEMPT_CAP {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return Ok(x);
        }
    }
    Err(cap_error())
}

fn small_omega<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> Result<f64> {
    let xm = mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let xs = x0.max(2.0 / omega);
    let k1 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a1 = k1 * x0;
    let (k2, a2) = if x0 < 2.0 / omega {
        let k2 = (-omega).exp();
        let a2 = if lambda == 0.0 {
            k2 * (2.0 / (omega * omega)).ln()
        } else {
            k2 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        (k2, a2)
    } else {
        (0.0, 0.0)
    };
    let k3 = xs.powf(lambda - 1.0);
    let a3 = 2.0 * k3 * (-xs * omega / 2.0).exp() / omega;
    let total = a1 + a2 + a3;
    for _ in 0..ATTEMPT_CAP {
        let mut v = total * rng.random::<f64>();
        let (x, hx) = if v <= a1 {
            (x0 * v / a1, k1)
        } else if v <= a1 + a2 {
            v -= a1;
            let x = if lambda == 0.0 {
                omega * (v * omega.exp()).exp()
            } else {
                (x0.powf(lambda) + lambda / k2 * v).powf(1.0 / lambda)
            };
            (x, k2 * x.powf(lambda - 1.0))
        } else {
            v -= a1 + a2;
            let x = -2.0 / omega * ((-xs * omega / 2.0).exp() - v * omega / (2.0 * k3)).ln();
            (x, k3 * (-x * omega / 2.0).exp())
        };
        let u = rng.random::<f64>() * hx;
        if x > 0.0 && u.ln() <= (lambda - 1.0) * x.ln() - 0.5 * omega * (x + 1.0 / x) {
            return Ok(x);
        }
    }
    Err(cap_error())
}

/// `ln K_nu(x)` for the modified Bessel function of the second kind, from
/// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`, scaled by `exp(x)`.
pub(crate) fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    let nu = nu.abs();
    let f = |t: f64| (-x * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp());
    // Integrand is negligible once x (cosh t - 1) - nu t exceeds ~745.
    let mut hi: f64 = 1.0;
    while x * (hi.cosh() - 1.0) - nu * hi < 750.0 {
        hi *= 1.5;
    }
    let q = quadrature::integrate(f, 0.0, hi, 1e-14);
    q.integral.ln() - x
}

pub fn density_generalized_inverse_gaussian(x: f64, p: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let omega = (a * b).sqrt();
    let ln_norm = 0.5 * p * (a / b).ln() - std::f64::consts::LN_2 - ln_bessel_k(p, omega);
    (ln_norm + (p - 1.0) * x.ln() - 0.5 * (a * x + b / x)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn bessel_k_half_order_closed_form() {
        // K_{1/2}(x) = sqrt(pi / (2x)) exp(-x)
        for &x in &[0.01, 0.5, 2.0, 30.0] {
            let exact = 0.5 * (std::f64::consts::PI / (2.0 * x)).ln() - x;
            assert!((ln_bessel_k(0.5, x) - exact).abs() < 1e-10, "x={x}");
        }
    }

    fn mean_close(p: f64, a: f64, b: f64, seed: u64) {
        let mut rng = RngStream::new(seed, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_generalized_inverse_gaussian(p, a, b, &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let omega = (a * b).sqrt();
        let exact = (b / a).sqrt() * (ln_bessel_k(p + 1.0, omega) - ln_bessel_k(p, omega)).exp();
        assert!((m - exact).abs() < 4.0 * (v / n as f64).sqrt(), "p={p} a={a} b={b}: {m} vs {exact}");
    }

    #[test]
    fn every_regime_has_the_right_mean() {
        mean_close(3.0, 1.0, 1.0, 1); // shifted
        mean_close(0.5, 2.0, 8.0, 2); // shifted via omega
        mean_close(0.9, 0.5, 0.5, 3); // no shift
        mean_close(0.5, 1.0, 1e-4, 4); // small omega
        mean_close(0.0, 1.0, 1e-3, 5); // small omega, zero index
        mean_close(-1.5, 2.0, 3.0, 6); // reciprocal
    }

    #[test]
    fn zero_b_is_gamma() {
        let mut rng = RngStream::new(1, 0);
        assert!(sample_generalized_inverse_gaussian(-1.0, 1.0, 0.0, &mut rng).is_err());
        assert!(sample_generalized_inverse_gaussian(2.0, 1.0, 0.0, &mut rng).unwrap() > 0.0);
        assert!(sample_generalized_inverse_gaussian(1.0, 0.0, 1.0, &mut rng).is_err());
    }
}
