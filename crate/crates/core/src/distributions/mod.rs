//! Samplers and density evaluators for the non-standard families used by
//! the augmentation schemes.
//!
//! All samplers are pure functions of their parameters and a caller-owned
//! random source.

mod asymmetric_laplace;
mod gamma;
mod gig;
mod inverse_gaussian;
mod log_concave;
mod normal;
mod polya_gamma;
mod truncated;

pub use asymmetric_laplace::density_asymmetric_laplace;
pub use gamma::{density_inverse_gamma, sample_gamma, sample_inverse_gamma};
pub use gig::{density_generalized_inverse_gaussian, sample_generalized_inverse_gaussian};
pub use inverse_gaussian::{density_inverse_gaussian, sample_inverse_gaussian, InverseGaussianParams};
pub use log_concave::LogConcaveRejection;
pub use normal::{sample_multivariate_normal, Parameterization};
pub use polya_gamma::{
    density_polya_gamma, sample_polya_gamma, PolyaGammaParams, DEFAULT_DENSITY_TOL,
    FRACTIONAL_SERIES_TERMS,
};
pub use truncated::{
    density_truncated_normal, density_truncated_t, sample_truncated_normal, sample_truncated_t,
    Side,
};

use statrs::function::erf::{erfc, erfc_inv};

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub(crate) fn ln_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        std_normal_cdf(x).ln()
    } else {
        // Asymptotic Mills ratio; erfc underflows here.
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub(crate) fn check_finite(name: &str, v: f64) -> crate::Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::param(format!("{name} must be finite, got {v}")))
    }
}

pub(crate) fn check_positive(name: &str, v: f64) -> crate::Result<()> {
    check_finite(name, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(crate::Error::param(format!("{name} must be positive, got {v}")))
    }
}
