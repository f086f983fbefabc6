//! Binomial logistic regression with Pólya-Gamma augmentation.

use nalgebra::{DMatrix, DVector};

use super::design::{check_rows, check_square};
use crate::distributions::{sample_polya_gamma, PolyaGammaParams};
use crate::kernel::{da_step, AugmentedModel};
use crate::linalg::{sample_canonical_gaussian, Cholesky};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Normal prior `N(mean, precision^-1)` on the coefficients; a zero
/// precision is the flat prior.
#[derive(Clone, Debug)]
pub struct GaussianPrior {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl GaussianPrior {
    pub fn new(mean: DVector<f64>, precision: DMatrix<f64>) -> Result<Self> {
        check_square("prior precision", &precision, mean.len())?;
        Ok(Self { mean, precision })
    }

    pub fn flat(p: usize) -> Self {
        Self {
            mean: DVector::zeros(p),
            precision: DMatrix::zeros(p, p),
        }
    }

    fn min_eigenvalue(&self) -> f64 {
        if self.precision.nrows() == 0 {
            return 0.0;
        }
        self.precision.clone().symmetric_eigen().eigenvalues.min()
    }
}

#[derive(Clone, Debug)]
pub struct LogisticModel {
    w: DMatrix<f64>,
    successes: Vec<u32>,
    trials: Vec<u32>,
    kappa: DVector<f64>,
    prior: GaussianPrior,
    prior_shift: DVector<f64>,
    prior_is_singular: bool,
}

impl LogisticModel {
    /// `successes[i]` out of `trials[i]` at covariates `w.row(i)`. A
    /// singular prior precision is accepted only when the caller asserts
    /// that the posterior is proper.
    pub fn new(
        w: DMatrix<f64>,
        successes: Vec<u32>,
        trials: Vec<u32>,
        prior: GaussianPrior,
        propriety_asserted: bool,
    ) -> Result<Self> {
        check_rows("successes", successes.len(), w.nrows())?;
        check_rows("trials", trials.len(), w.nrows())?;
        check_rows("prior mean", prior.mean.len(), w.ncols())?;
        for (i, (&z, &l)) in successes.iter().zip(&trials).enumerate() {
            if l == 0 || z > l {
                return Err(Error::InvalidModel(format!("observation {i}: need 0 <= {z} <= {l} and at least one trial")));
            }
        }
        let scale = prior.precision.amax().max(1.0);
        let min_eig = prior.min_eigenvalue();
        if min_eig < -1e-10 * scale {
            return Err(Error::InvalidModel("prior precision is not positive semidefinite".into()));
        }
        let prior_is_singular = min_eig <= 1e-12 * scale;
        if prior_is_singular && !propriety_asserted {
            return Err(Error::InvalidModel(
                "singular prior precision needs the posterior-propriety assertion".into(),
            ));
        }
        let kappa = DVector::from_iterator(
            successes.len(),
            successes.iter().zip(&trials).map(|(&z, &l)| z as f64 - l as f64 / 2.0),
        );
        let prior_shift = &prior.precision * &prior.mean;
        Ok(Self {
            w,
            successes,
            trials,
            kappa,
            prior,
            prior_shift,
            prior_is_singular,
        })
    }

    /// `kappa_i = z_i - l_i / 2`.
    pub fn kappa(&self) -> &DVector<f64> {
        &self.kappa
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn successes(&self) -> &[u32] {
        &self.successes
    }

    pub fn trials(&self) -> &[u32] {
        &self.trials
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    /// Unnormalized log posterior of `beta`.
    pub fn log_posterior(&self, beta: &DVector<f64>) -> f64 {
        let eta = &self.w * beta;
        let lik: f64 = eta
            .iter()
            .zip(&self.successes)
            .zip(&self.trials)
            .map(|((&e, &z), &l)| z as f64 * e - l as f64 * softplus(e))
            .sum();
        let d = beta - &self.prior.mean;
        lik - 0.5 * d.dot(&(&self.prior.precision * &d))
    }

    pub(crate) fn draw_latent_item(&self, i: usize, beta: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
        let eta = self.w.row(i).dot(&beta.transpose());
        Ok(sample_polya_gamma(PolyaGammaParams::new(self.trials[i] as f64, eta.abs())?, rng))
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl AugmentedModel for LogisticModel {
    type State = DVector<f64>;
    type Latent = DVector<f64>;

    fn draw_latent(&self, beta: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
        check_rows("beta", beta.len(), self.w.ncols())?;
        let draws = (0..self.w.nrows()).map(|i| self.draw_latent_item(i, beta, rng)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(draws))
    }

    fn draw_state(&self, omega: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
        let weighted = DMatrix::from_fn(self.w.nrows(), self.w.ncols(), |i, j| self.w[(i, j)] * omega[i]);
        let precision = self.w.transpose() * weighted + &self.prior.precision;
        let chol = Cholesky::new(&precision).map_err(|e| match e {
            Error::NotSpd(msg) if self.prior_is_singular => Error::NotSpd(format!(
                "{msg}; the prior precision is singular and the posterior-propriety assertion does not hold for this data"
            )),
            other => other,
        })?;
        let b = self.w.transpose() * &self.kappa + &self.prior_shift;
        Ok(sample_canonical_gaussian(&chol, &b, rng))
    }

    fn state_dim(&self) -> usize {
        self.w.ncols()
    }

    fn latent_dim(&self) -> usize {
        self.w.nrows()
    }
}

pub fn pg_logistic_da_step(model: &LogisticModel, beta: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    da_step(model, beta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_by_hand() {
        let w = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let prior = GaussianPrior::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        let m = LogisticModel::new(w, vec![1, 0], vec![1, 1], prior, false).unwrap();
        assert_eq!(m.kappa().as_slice(), &[0.5, -0.5]);
    }

    #[test]
    fn flat_prior_needs_assertion() {
        let w = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        assert!(LogisticModel::new(w.clone(), vec![1, 0], vec![1, 1], GaussianPrior::flat(1), false).is_err());
        assert!(LogisticModel::new(w, vec![1, 0], vec![1, 1], GaussianPrior::flat(1), true).is_ok());
    }

    #[test]
    fn invalid_counts_are_rejected() {
        let w = DMatrix::from_column_slice(1, 1, &[1.0]);
        let prior = GaussianPrior::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        assert!(LogisticModel::new(w.clone(), vec![2], vec![1], prior.clone(), false).is_err());
        assert!(LogisticModel::new(w, vec![0], vec![0], prior, false).is_err());
    }
}
