use rand::Rng;
use rand_distr::StandardNormal;

use super::check_positive;
use crate::Result;

/// Inverse-Gaussian law with the given mean and shape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseGaussianParams {
    mean: f64,
    shape: f64,
}

impl InverseGaussianParams {
    pub fn new(mean: f64, shape: f64) -> Result<Self> {
        check_positive("inverse-Gaussian mean", mean)?;
        check_positive("inverse-Gaussian shape", shape)?;
        Ok(Self { mean, shape })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }
}

/// Michael-Schucany-Haas transformation sampler.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(params: InverseGaussianParams, rng: &mut R) -> f64 {
    let InverseGaussianParams { mean, shape } = params;
    let n: f64 = rng.sample(StandardNormal);
    let w = mean * n * n / (2.0 * shape);
    // Smaller root of the quadratic, in the cancellation-free form.
    let x = mean / (1.0 + w + (w * w + 2.0 * w).sqrt());
    let u: f64 = rng.random();
    if u * (mean + x) <= mean {
        x
    } else {
        mean * (mean / x)
    }
}

pub fn density_inverse_gaussian(x: f64, params: InverseGaussianParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let InverseGaussianParams { mean, shape } = params;
    let z = x - mean;
    (shape / (2.0 * std::f64::consts::PI * x * x * x)).sqrt() * (-shape * z * z / (2.0 * mean * mean * x)).exp()
}

/// CDF, needed by the Pólya-Gamma proposal mixture.
pub(crate) fn ln_cdf_inverse_gaussian(x: f64, mean: f64, shape: f64) -> f64 {
    use super::ln_std_normal_cdf;
    let r = (shape / x).sqrt();
    let a = ln_std_normal_cdf(r * (x / mean - 1.0));
    let b = 2.0 * shape / mean + ln_std_normal_cdf(-r * (x / mean + 1.0));
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn rejects_bad_parameters() {
        assert!(InverseGaussianParams::new(f64::NAN, 1.0).is_err());
        assert!(InverseGaussianParams::new(1.0, f64::INFINITY).is_err());
        assert!(InverseGaussianParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn huge_mean_stays_finite() {
        let p = InverseGaussianParams::new(1e150, 1.0).unwrap();
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            let x = sample_inverse_gaussian(p, &mut rng);
            assert!(x.is_finite() && x > 0.0);
        }
    }

    #[test]
    fn cdf_matches_quadrature() {
        let p = InverseGaussianParams::new(1.5, 0.7).unwrap();
        let q = quadrature::integrate(|x| density_inverse_gaussian(x, p), 0.0, 0.9, 1e-13).integral;
        assert!((ln_cdf_inverse_gaussian(0.9, 1.5, 0.7).exp() - q).abs() < 1e-10);
    }
}
