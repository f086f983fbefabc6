//! Robit regression: binary responses with a Student-t link, augmented by
//! latent utilities `U_i` and precisions `lambda_i`.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::design::{check_rows, check_square};
use crate::distributions::{sample_gamma, sample_truncated_t, Side};
use crate::kernel::{da_step, AugmentedModel};
use crate::linalg::{sample_canonical_gaussian, Cholesky};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Latent `(U_i, lambda_i)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct RobitLatent {
    pub utility: DVector<f64>,
    pub precision: DVector<f64>,
}

#[derive(Clone, Debug)]
pub struct RobitModel {
    w: DMatrix<f64>,
    z: Vec<bool>,
    nu: f64,
    prior_mean: DVector<f64>,
    prior_precision: DMatrix<f64>,
    prior_shift: DVector<f64>,
}

impl RobitModel {
    /// Prior `beta ~ N(prior_mean, prior_precision^-1)`.
    pub fn new(w: DMatrix<f64>, z: Vec<bool>, nu: f64, prior_mean: DVector<f64>, prior_precision: DMatrix<f64>) -> Result<Self> {
        check_rows("responses", z.len(), w.nrows())?;
        check_rows("prior mean", prior_mean.len(), w.ncols())?;
        check_square("prior precision", &prior_precision, w.ncols())?;
        Cholesky::new(&prior_precision)?;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidModel(format!("degrees of freedom must be positive, got {nu}")));
        }
        let prior_shift = &prior_precision * &prior_mean;
        Ok(Self {
            w,
            z,
            nu,
            prior_mean,
            prior_precision,
            prior_shift,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Unnormalized log posterior `sum log F_nu(+-w_i beta) + log prior`.
    pub fn log_posterior(&self, beta: &DVector<f64>) -> f64 {
        let t = StudentsT::new(0.0, 1.0, self.nu).expect("validated degrees of freedom");
        let eta = &self.w * beta;
        let lik: f64 = eta
            .iter()
            .zip(&self.z)
            .map(|(&e, &zi)| if zi { t.cdf(e).ln() } else { t.sf(e).ln() })
            .sum();
        let d = beta - &self.prior_mean;
        lik - 0.5 * d.dot(&(&self.prior_precision * &d))
    }

    /// `lambda_i | U_i, beta ~ Gamma((nu + 1) / 2, rate (nu + (U_i - w_i beta)^2) / 2)`.
    pub fn draw_precision(&self, utility: f64, eta: f64, rng: &mut RngStream) -> Result<f64> {
        let r = utility - eta;
        sample_gamma((self.nu + 1.0) / 2.0, (self.nu + r * r) / 2.0, rng)
    }
}

impl AugmentedModel for RobitModel {
    type State = DVector<f64>;
    type Latent = RobitLatent;

    /// `U_i` from the sign-truncated `t_nu(w_i beta, 1)`, then `lambda_i`
    /// given `U_i`.
    fn draw_latent(&self, beta: &DVector<f64>, rng: &mut RngStream) -> Result<RobitLatent> {
        check_rows("beta", beta.len(), self.w.ncols())?;
        let eta = &self.w * beta;
        let m = eta.len();
        let mut utility = DVector::zeros(m);
        let mut precision = DVector::zeros(m);
        for i in 0..m {
            utility[i] = sample_truncated_t(eta[i], self.nu, Side::from_indicator(self.z[i]), rng)?;
            precision[i] = self.draw_precision(utility[i], eta[i], rng)?;
        }
        Ok(RobitLatent { utility, precision })
    }

    /// Gaussian with precision `Sigma_a + sum lambda_i w_i w_i'`.
    fn draw_state(&self, y: &RobitLatent, rng: &mut RngStream) -> Result<DVector<f64>> {
        let weighted = DMatrix::from_fn(self.w.nrows(), self.w.ncols(), |i, j| self.w[(i, j)] * y.precision[i]);
        let precision = weighted.transpose() * &self.w + &self.prior_precision;
        let b = weighted.transpose() * &y.utility + &self.prior_shift;
        Ok(sample_canonical_gaussian(&Cholesky::new(&precision)?, &b, rng))
    }

    fn state_dim(&self) -> usize {
        self.w.ncols()
    }

    fn latent_dim(&self) -> usize {
        2 * self.w.nrows()
    }
}

pub fn robit_da_step(model: &RobitModel, beta: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    da_step(model, beta, rng)
}
