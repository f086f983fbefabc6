//! Rejection sampling for univariate log-concave densities.
//!
//! The hat is flat at the log-density's maximum on `[mode - w, mode + w]`
//! and exponential beyond, following the chords through the mode and the
//! points `mode ± w`. Concavity puts each extended chord above the
//! log-density, so the hat dominates without derivative information.

use rand::Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

pub struct LogConcaveRejection<F> {
    log_density: F,
    mode: f64,
    width: f64,
    lower: f64,
    upper: f64,
    max_attempts: usize,
}

impl<F: Fn(f64) -> f64> LogConcaveRejection<F> {
    /// `mode` must maximize `log_density` on `[lower, upper]`; `width` is a
    /// scale such as `1 / sqrt(-h''(mode))`.
    pub fn new(log_density: F, mode: f64, width: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !(mode >= lower && mode <= upper) {
            return Err(Error::param(format!("mode {mode} outside support [{lower}, {upper}]")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::param(format!("envelope width must be positive, got {width}")));
        }
        if !log_density(mode).is_finite() {
            return Err(Error::param(format!("log-density is not finite at mode {mode}")));
        }
        Ok(Self {
            log_density,
            mode,
            width,
            lower,
            upper,
            max_attempts: 100_000,
        })
    }

    pub fn with_max_attempts(mut self, n: usize) -> Self {
        self.max_attempts = n;
        self
    }

    /// Chord slope from the mode to `mode + dir * w`, widening `w` until the
    /// density has actually dropped.
    fn tail(&self, dir: f64, bound: f64) -> Option<(f64, f64)> {
        let h0 = (self.log_density)(self.mode);
        let mut w = self.width;
        for _ in 0..60 {
            let x = self.mode + dir * w;
            if (dir > 0.0 && x >= bound) || (dir < 0.0 && x <= bound) {
                return None;
            }
            let hx = (self.log_density)(x);
            if hx < h0 - 1e-3 {
                return Some((x, (h0 - hx) / w));
            }
            w *= 2.0;
        }
        None
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let h0 = (self.log_density)(self.mode);
        let right = self.tail(1.0, self.upper);
        let left = self.tail(-1.0, self.lower);
        let mid_hi = right.map_or(self.upper, |(x, _)| x);
        let mid_lo = left.map_or(self.lower, |(x, _)| x);
        if !(mid_hi - mid_lo).is_finite() {
            return Err(Error::param("log-concave density is not integrable on its support"));
        }
        // Masses relative to exp(h0).
        let tail_mass = |t: Option<(f64, f64)>, bound: f64| match t {
            Some((x, rate)) => {
                (-rate * (x - self.mode).abs()).exp() * (1.0 - (-rate * (bound - x).abs()).exp()) / rate
            }
            None => 0.0,
        };
        let m_mid = mid_hi - mid_lo;
        let m_right = tail_mass(right, self.upper);
        let m_left = tail_mass(left, self.lower);
        let total = m_mid + m_right + m_left;
        for _ in 0..self.max_attempts {
            let u = rng.random::<f64>() * total;
            let (x, hat) = if u < m_mid {
                (mid_lo + rng.random::<f64>() * m_mid, h0)
            } else {
                let (dir, (x0, rate), bound) = if u < m_mid + m_right {
                    (1.0, right.expect("mass is positive"), self.upper)
                } else {
                    (-1.0, left.expect("mass is positive"), self.lower)
                };
                let d = loop {
                    let d = rng.sample::<f64, _>(Exp1) / rate;
                    if d < (bound - x0).abs() {
                        break d;
                    }
                };
                (x0 + dir * d, h0 - rate * (d + (x0 - self.mode).abs()))
            };
            let h = (self.log_density)(x);
            if rng.random::<f64>().ln() <= h - hat {
                return Ok(x);
            }
        }
        Err(Error::RejectionCap {
            attempts: self.max_attempts,
            context: "log-concave envelope".into(),
        })
    }
}
