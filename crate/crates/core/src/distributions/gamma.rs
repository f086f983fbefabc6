use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use super::check_positive;
use crate::Result;

/// Gamma draw with the given shape and rate.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| crate::Error::param(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Inverse-gamma draw: the reciprocal of a Gamma(shape, rate) draw, so the
/// density is proportional to `x^(-shape-1) exp(-rate/x)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    loop {
        let g = sample_gamma(shape, rate, rng)?;
        // A gamma draw can underflow to zero for tiny shapes.
        if g > 0.0 {
            return Ok(1.0 / g);
        }
    }
}

pub fn density_inverse_gamma(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x).exp()
}
