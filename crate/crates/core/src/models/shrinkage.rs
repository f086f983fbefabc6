//! Bayesian lasso and elastic net with the normal scale-mixture
//! augmentation. The latent vector holds the precisions `1 / y_j`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::{check_centered, check_rows};
use crate::distributions::{sample_gamma, sample_inverse_gamma, sample_inverse_gaussian, InverseGaussianParams};
use crate::kernel::{da_step, AugmentedModel, TraceRow};
use crate::linalg::{standard_normal_vector, Cholesky};
use crate::rng::RngStream;
use crate::{Error, Result};

/// `(beta, sigma^2)` for the Gaussian-likelihood regression models.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionState {
    pub beta: DVector<f64>,
    pub sigma2: f64,
}

impl RegressionState {
    pub fn new(beta: DVector<f64>, sigma2: f64) -> Self {
        Self { beta, sigma2 }
    }
}

impl TraceRow for RegressionState {
    fn row(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.beta.iter().copied().collect();
        r.push(self.sigma2);
        r
    }

    fn column_names(&self) -> Vec<String> {
        let mut n: Vec<String> = (0..self.beta.len()).map(|j| format!("beta{j}")).collect();
        n.push("sigma2".into());
        n
    }
}

/// Below `ZERO_COEFFICIENT_RATIO * sigma` a coefficient is treated as zero
/// and its latent scale drawn from the limiting Gamma(1/2, lambda^2 / 2).
pub const ZERO_COEFFICIENT_RATIO: f64 = 1e-300;

/// Inverse-gamma prior `(shape, rate)` on `sigma^2`. `(0, 0)` is the
/// improper `1 / sigma^2` prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariancePrior {
    pub shape: f64,
    pub rate: f64,
}

impl VariancePrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape >= 0.0 && rate >= 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(Error::param(format!("variance prior ({shape}, {rate}) must be nonnegative")));
        }
        Ok(Self { shape, rate })
    }

    pub fn reference() -> Self {
        Self { shape: 0.0, rate: 0.0 }
    }
}

#[derive(Clone, Debug)]
struct Shrinkage {
    w: DMatrix<f64>,
    z_tilde: DVector<f64>,
    wtw: DMatrix<f64>,
    wtz: DVector<f64>,
    ztz: f64,
    l1: f64,
    l2: f64,
    prior: VariancePrior,
}

impl Shrinkage {
    fn new(w: DMatrix<f64>, z: &DVector<f64>, l1: f64, l2: f64, prior: VariancePrior) -> Result<Self> {
        check_rows("response", z.len(), w.nrows())?;
        check_centered(&w)?;
        if !(l1 > 0.0 && l1.is_finite()) {
            return Err(Error::InvalidModel(format!("L1 penalty must be positive, got {l1}")));
        }
        if !(l2 >= 0.0 && l2.is_finite()) {
            return Err(Error::InvalidModel(format!("L2 penalty must be nonnegative, got {l2}")));
        }
        let n = w.nrows() as f64;
        if !((n - 1.0) / 2.0 + prior.shape > 0.0) {
            return Err(Error::InvalidModel("need at least two observations or a positive prior shape".into()));
        }
        let z_tilde = z.add_scalar(-z.mean());
        let wtw = w.transpose() * &w;
        let wtz = w.transpose() * &z_tilde;
        let ztz = z_tilde.norm_squared();
        Ok(Self {
            w,
            z_tilde,
            wtw,
            wtz,
            ztz,
            l1,
            l2,
            prior,
        })
    }

    fn precision(&self, inv_y: &DVector<f64>) -> Result<Cholesky> {
        let mut p = self.wtw.clone();
        for j in 0..p.nrows() {
            p[(j, j)] += self.l2 + inv_y[j];
        }
        Cholesky::new(&p)
    }

    fn check_state(&self, x: &RegressionState) -> Result<()> {
        if !(x.sigma2 > 0.0) {
            return Err(Error::param(format!("sigma^2 must be positive, got {}", x.sigma2)));
        }
        check_rows("beta", x.beta.len(), self.w.ncols())
    }

    /// `1 / y_j` given `beta_j` and `sigma`.
    fn draw_scale(&self, b: f64, sigma: f64, rng: &mut RngStream) -> Result<f64> {
        let lambda_sq = self.l1 * self.l1;
        if b.abs() < ZERO_COEFFICIENT_RATIO * sigma {
            Ok(1.0 / sample_gamma(0.5, lambda_sq / 2.0, rng)?)
        } else {
            let params = InverseGaussianParams::new(self.l1 * sigma / b.abs(), lambda_sq)?;
            Ok(sample_inverse_gaussian(params, rng))
        }
    }

    fn draw_latent(&self, x: &RegressionState, rng: &mut RngStream) -> Result<DVector<f64>> {
        self.check_state(x)?;
        let sigma = x.sigma2.sqrt();
        let draws = x.beta.iter().map(|&b| self.draw_scale(b, sigma, rng)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(draws))
    }

    fn draw_state(&self, inv_y: &DVector<f64>, rng: &mut RngStream) -> Result<RegressionState> {
        let chol = self.precision(inv_y)?;
        let mean = chol.solve(&self.wtz);
        let quad = (self.ztz - self.wtz.dot(&mean)).max(0.0);
        let shape = (self.w.nrows() as f64 - 1.0) / 2.0 + self.prior.shape;
        let sigma2 = sample_inverse_gamma(shape, quad / 2.0 + self.prior.rate, rng)?;
        let z = standard_normal_vector(mean.len(), rng);
        let beta = mean + sigma2.sqrt() * chol.solve_upper(&z);
        Ok(RegressionState { beta, sigma2 })
    }

    fn log_target(&self, x: &RegressionState) -> f64 {
        let p = x.beta.len() as f64;
        let n = self.w.nrows() as f64;
        let s2 = x.sigma2;
        let resid = (&self.z_tilde - &self.w * &x.beta).norm_squared();
        let l1_term = 2.0 * self.l1 * s2.sqrt() * x.beta.iter().map(|b| b.abs()).sum::<f64>();
        let l2_term = self.l2 * x.beta.norm_squared();
        -(n - 1.0 + p) / 2.0 * s2.ln() - (resid + l1_term + l2_term) / (2.0 * s2) - (self.prior.shape + 1.0) * s2.ln()
            - self.prior.rate / s2
    }
}

macro_rules! shrinkage_model {
    ($name:ident) => {
        impl $name {
            pub fn design(&self) -> &DMatrix<f64> {
                &self.0.w
            }

            /// The mean-centred response.
            pub fn centered_response(&self) -> &DVector<f64> {
                &self.0.z_tilde
            }

            pub fn variance_prior(&self) -> VariancePrior {
                self.0.prior
            }

            /// Shape of the inverse-gamma conditional of `sigma^2` given `y`.
            pub fn sigma2_shape(&self) -> f64 {
                (self.0.w.nrows() as f64 - 1.0) / 2.0 + self.0.prior.shape
            }

            /// `E[beta | sigma^2, y]` given the latent precisions `1 / y_j`.
            pub fn beta_conditional_mean(&self, inv_y: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(self.0.precision(inv_y)?.solve(&self.0.wtz))
            }

            /// Unnormalized log posterior density of `(beta, sigma^2)`.
            pub fn log_posterior(&self, x: &RegressionState) -> f64 {
                self.0.log_target(x)
            }
        }

        impl AugmentedModel for $name {
            type State = RegressionState;
            type Latent = DVector<f64>;

            fn draw_latent(&self, x: &RegressionState, rng: &mut RngStream) -> Result<DVector<f64>> {
                self.0.draw_latent(x, rng)
            }

            fn draw_state(&self, y: &DVector<f64>, rng: &mut RngStream) -> Result<RegressionState> {
                self.0.draw_state(y, rng)
            }

            fn state_dim(&self) -> usize {
                self.0.w.ncols() + 1
            }

            fn latent_dim(&self) -> usize {
                self.0.w.ncols()
            }
        }
    };
}

/// Bayesian lasso. The design must have centred columns; the response is
/// centred internally.
#[derive(Clone, Debug)]
pub struct LassoModel(Shrinkage);

impl LassoModel {
    pub fn new(w: DMatrix<f64>, z: &DVector<f64>, lambda: f64, prior: VariancePrior) -> Result<Self> {
        Ok(Self(Shrinkage::new(w, z, lambda, 0.0, prior)?))
    }

    pub fn lambda(&self) -> f64 {
        self.0.l1
    }

    /// Latent scales for the coefficients in `range`, checking `preempted`
    /// before each one. `None` means the draw was abandoned.
    pub(crate) fn draw_latent_range(
        &self,
        x: &RegressionState,
        range: std::ops::Range<usize>,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<DVector<f64>>> {
        self.0.check_state(x)?;
        let sigma = x.sigma2.sqrt();
        let mut out = DVector::zeros(range.len());
        for (k, j) in range.enumerate() {
            if preempted() {
                return Ok(None);
            }
            out[k] = self.0.draw_scale(x.beta[j], sigma, rng)?;
        }
        Ok(Some(out))
    }
}

shrinkage_model!(LassoModel);

/// Bayesian elastic net: the lasso augmentation with the ridge term added to
/// the latent precisions.
#[derive(Clone, Debug)]
pub struct ElasticNetModel(Shrinkage);

impl ElasticNetModel {
    pub fn new(w: DMatrix<f64>, z: &DVector<f64>, lambda1: f64, lambda2: f64, prior: VariancePrior) -> Result<Self> {
        Ok(Self(Shrinkage::new(w, z, lambda1, lambda2, prior)?))
    }

    pub fn lambda1(&self) -> f64 {
        self.0.l1
    }

    pub fn lambda2(&self) -> f64 {
        self.0.l2
    }

    /// Diagonal of `D~_y`: `1 / (lambda2 + 1 / y_j)`.
    pub fn scale_diagonal(&self, inv_y: &DVector<f64>) -> DVector<f64> {
        inv_y.map(|v| 1.0 / (self.0.l2 + v))
    }
}

shrinkage_model!(ElasticNetModel);

pub fn lasso_da_step(model: &LassoModel, x: &RegressionState, rng: &mut RngStream) -> Result<RegressionState> {
    da_step(model, x, rng)
}

pub fn elastic_net_da_step(model: &ElasticNetModel, x: &RegressionState, rng: &mut RngStream) -> Result<RegressionState> {
    da_step(model, x, rng)
}
