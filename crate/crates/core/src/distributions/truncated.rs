//! Normal and Student-t laws truncated to one side of zero.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, StudentsT};

use super::{check_finite, check_positive, std_normal_cdf, std_normal_quantile};
use crate::{Error, Result};

/// Which side of zero the draw is confined to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Strictly positive draws (indicator `e = 1`).
    Positive,
    /// Draws at or below zero (indicator `e = 0`).
    NonPositive,
}

impl Side {
    pub fn from_indicator(e: bool) -> Self {
        if e {
            Side::Positive
        } else {
            Side::NonPositive
        }
    }
}

const TAIL_SWITCH: f64 = 5.0;

/// Standard normal conditioned on `z > lower`.
fn std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower > TAIL_SWITCH {
        // Exponential envelope with the optimal rate.
        let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
        loop {
            let z = lower + rng.sample::<f64, _>(Exp1) / rate;
            let d = z - rate;
            if rng.random::<f64>() <= (-0.5 * d * d).exp() {
                return z;
            }
        }
    } else if lower < -TAIL_SWITCH {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > lower {
                return z;
            }
        }
    } else if lower > 0.0 {
        let u: f64 = rng.random();
        -std_normal_quantile(u * std_normal_cdf(-lower))
    } else {
        let u: f64 = rng.random();
        let f = std_normal_cdf(lower);
        std_normal_quantile(f + u * (1.0 - f))
    }
}

/// `N(mu, sigma2)` restricted to `(0, inf)` or `(-inf, 0]`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mu: f64, sigma2: f64, side: Side, rng: &mut R) -> Result<f64> {
    check_finite("truncated-normal mean", mu)?;
    check_positive("truncated-normal variance", sigma2)?;
    let sigma = sigma2.sqrt();
    // Reflect the non-positive case onto the positive one.
    let m = match side {
        Side::Positive => mu,
        Side::NonPositive => -mu,
    };
    loop {
        let x = m + sigma * std_normal_above(-m / sigma, rng);
        match side {
            Side::Positive if x > 0.0 => return Ok(x),
            Side::NonPositive if x >= 0.0 => return Ok(-x),
            _ => continue,
        }
    }
}

pub fn density_truncated_normal(x: f64, mu: f64, sigma2: f64, side: Side) -> f64 {
    let inside = match side {
        Side::Positive => x > 0.0,
        Side::NonPositive => x <= 0.0,
    };
    if !inside {
        return 0.0;
    }
    let sigma = sigma2.sqrt();
    let mass = match side {
        Side::Positive => std_normal_cdf(mu / sigma),
        Side::NonPositive => std_normal_cdf(-mu / sigma),
    };
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt() * mass)
}

fn student(nu: f64) -> Result<StudentsT> {
    StudentsT::new(0.0, 1.0, nu).map_err(|e| Error::param(format!("Student-t: {e}")))
}

/// Unit-scale Student-t with `nu` degrees of freedom centred at `location`,
/// restricted to one side of zero. Sampled by inverting the CDF on the
/// tail that keeps the most precision.
pub fn sample_truncated_t<R: Rng + ?Sized>(location: f64, nu: f64, side: Side, rng: &mut R) -> Result<f64> {
    check_finite("truncated-t location", location)?;
    check_positive("degrees of freedom", nu)?;
    let t = student(nu)?;
    let m = match side {
        Side::Positive => location,
        Side::NonPositive => -location,
    };
    let lower = -m;
    loop {
        let v: f64 = rng.random();
        let z = if lower > 0.0 {
            let tail = t.cdf(-lower);
            if !(tail > 0.0) {
                return Err(Error::param(format!(
                    "truncation region beyond {lower} has no representable Student-t mass"
                )));
            }
            -t.inverse_cdf(v * tail)
        } else {
            let f = t.cdf(lower);
            t.inverse_cdf(f + v * (1.0 - f))
        };
        let x = m + z;
        if !x.is_finite() {
            continue;
        }
        match side {
            Side::Positive if x > 0.0 => return Ok(x),
            Side::NonPositive if x >= 0.0 => return Ok(-x),
            _ => continue,
        }
    }
}

pub fn density_truncated_t(x: f64, location: f64, nu: f64, side: Side) -> Result<f64> {
    let t = student(nu)?;
    let (inside, mass) = match side {
        Side::Positive => (x > 0.0, t.sf(-location)),
        Side::NonPositive => (x <= 0.0, t.cdf(-location)),
    };
    Ok(if inside { t.pdf(x - location) / mass } else { 0.0 })
}
