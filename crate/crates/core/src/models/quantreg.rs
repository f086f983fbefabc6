//! Bayesian quantile regression with asymmetric-Laplace errors, written as
//! a two-block model: `u = beta`, `v = R` (exponential mixing scales) and
//! the latent block is the error scale `sigma`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::design::{check_rows, check_square};
use crate::distributions::{
    density_asymmetric_laplace, sample_generalized_inverse_gaussian, sample_inverse_gamma,
};
use crate::kernel::{two_block_da_step, two_block_pxda_step, ScaleGroup, TwoBlockModel};
use crate::linalg::{sample_canonical_gaussian, Cholesky};
use crate::oracle::TwoBlockVariant;
use crate::rng::RngStream;
use crate::{Error, Result};

/// `theta(alpha) = (1 - 2 alpha) / (alpha (1 - alpha))`.
pub fn quantile_theta(alpha: f64) -> f64 {
    (1.0 - 2.0 * alpha) / (alpha * (1.0 - alpha))
}

/// `tau^2(alpha) = 2 / (alpha (1 - alpha))`.
pub fn quantile_tau2(alpha: f64) -> f64 {
    2.0 / (alpha * (1.0 - alpha))
}

/// Priors `beta ~ N(mean, covariance)` and `sigma ~ IG(n0 / 2, t0 / 2)`.
#[derive(Clone, Debug)]
pub struct QuantRegPrior {
    pub beta_mean: DVector<f64>,
    pub beta_covariance: DMatrix<f64>,
    pub n0: f64,
    pub t0: f64,
}

pub const DEFAULT_REJECTION_CAP: usize = 100_000;

#[derive(Clone, Debug)]
pub struct QuantRegModel {
    w: DMatrix<f64>,
    z: DVector<f64>,
    alpha: f64,
    theta: f64,
    tau2: f64,
    prior: QuantRegPrior,
    prior_precision: DMatrix<f64>,
    prior_shift: DVector<f64>,
    log_det_prior_precision: f64,
    rejection_cap: usize,
}

/// `(beta, R)`.
pub type QuantRegState = (DVector<f64>, DVector<f64>);

impl QuantRegModel {
    pub fn new(w: DMatrix<f64>, z: DVector<f64>, alpha: f64, prior: QuantRegPrior) -> Result<Self> {
        check_rows("responses", z.len(), w.nrows())?;
        check_rows("prior mean", prior.beta_mean.len(), w.ncols())?;
        check_square("prior covariance", &prior.beta_covariance, w.ncols())?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidModel(format!("quantile level must lie in (0, 1), got {alpha}")));
        }
        if !(prior.n0 > 0.0 && prior.t0 > 0.0 && prior.n0.is_finite() && prior.t0.is_finite()) {
            return Err(Error::InvalidModel("n0 and t0 must be positive".into()));
        }
        let prior_precision = Cholesky::new(&prior.beta_covariance)?.inverse();
        let chol = Cholesky::new(&prior_precision)?;
        let prior_shift = &prior_precision * &prior.beta_mean;
        Ok(Self {
            theta: quantile_theta(alpha),
            tau2: quantile_tau2(alpha),
            log_det_prior_precision: chol.log_det(),
            w,
            z,
            alpha,
            prior,
            prior_precision,
            prior_shift,
            rejection_cap: DEFAULT_REJECTION_CAP,
        })
    }

    pub fn with_rejection_cap(mut self, cap: usize) -> Self {
        self.rejection_cap = cap;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn observations(&self) -> usize {
        self.w.nrows()
    }

    fn check_scales(r: &DVector<f64>) -> Result<()> {
        if r.iter().all(|&v| v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::param("mixing scales must be positive"))
        }
    }

    /// Unnormalized log posterior of `(beta, sigma)` with the mixing scales
    /// integrated out.
    pub fn log_posterior(&self, beta: &DVector<f64>, sigma: f64) -> f64 {
        if !(sigma > 0.0) {
            return f64::NEG_INFINITY;
        }
        let resid = &self.z - &self.w * beta;
        let lik: f64 = resid.iter().map(|e| (density_asymmetric_laplace(e / sigma, self.alpha) / sigma).ln()).sum();
        let d = beta - &self.prior.beta_mean;
        let prior_beta = -0.5 * d.dot(&(&self.prior_precision * &d));
        let prior_sigma = -(self.prior.n0 / 2.0 + 1.0) * sigma.ln() - self.prior.t0 / (2.0 * sigma);
        lik + prior_beta + prior_sigma
    }

    /// Shape and rate of the inverse-gamma conditional of `sigma` given
    /// `(beta, R)`.
    pub fn sigma_conditional(&self, beta: &DVector<f64>, r: &DVector<f64>) -> (f64, f64) {
        let n = self.observations() as f64;
        let resid = &self.z - &self.w * beta;
        let quad: f64 = resid
            .iter()
            .zip(r.iter())
            .map(|(e, ri)| (e - self.theta * ri).powi(2) / (2.0 * self.tau2 * ri))
            .sum();
        (1.5 * n + self.prior.n0 / 2.0, quad + r.sum() + self.prior.t0 / 2.0)
    }

    /// `GIG(1/2, theta^2 / (sigma tau^2) + 2 / sigma, e^2 / (sigma tau^2))`
    /// parameters for one mixing scale.
    pub fn scale_conditional(&self, residual: f64, sigma: f64) -> (f64, f64, f64) {
        let st = sigma * self.tau2;
        (0.5, self.theta * self.theta / st + 2.0 / sigma, residual * residual / st)
    }

    /// Draws the element `g` of the scale group acting on `sigma` from the
    /// chosen two-block sandwich density.
    pub fn draw_scale_element(
        &self,
        variant: TwoBlockVariant,
        beta: &DVector<f64>,
        r: &DVector<f64>,
        sigma: f64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        let sigma_new = match variant {
            TwoBlockVariant::Full => {
                let (shape, rate) = self.sigma_conditional(beta, r);
                sample_inverse_gamma(shape, rate, rng)?
            }
            TwoBlockVariant::MarginalOverU => self.draw_sigma_marginal_over_beta(r, rng)?,
        };
        Ok(sigma_new / sigma)
    }

    /// `sigma` from `f(R, sigma)` with `beta` integrated out, by rejection
    /// from an inverse-gamma envelope.
    ///
    /// With `D = tau^2 diag(R)`, `A = W'D^-1 W` and `Q` the `D^-1`-weighted
    /// least-squares residual of `d = z - theta R - W beta0`, the exponent
    /// `d'(sigma D + W B0 W')^-1 d` is at least `Q / sigma`, and
    /// `det(B0^-1 + A / sigma)` is at least both `det(B0^-1)` and
    /// `det(A) / sigma^p`. Each lower bound gives an envelope; the one used
    /// is picked from `(R, model)` alone, so the draw stays exact.
    fn draw_sigma_marginal_over_beta(&self, r: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
        let n = self.observations() as f64;
        let p = self.w.ncols() as f64;
        let d = &self.z - r * self.theta - &self.w * &self.prior.beta_mean;
        let d_inv = r.map(|ri| 1.0 / (self.tau2 * ri));
        let weighted = DMatrix::from_fn(self.w.nrows(), self.w.ncols(), |i, j| self.w[(i, j)] * d_inv[i]);
        let wd = weighted.transpose() * &d;
        let dd = d.dot(&d.component_mul(&d_inv));
        let gram = Cholesky::new(&(self.w.transpose() * &weighted)).ok();
        let (least_squares, log_det_gram) = match &gram {
            Some(c) => ((dd - wd.dot(&c.solve(&wd))).max(0.0), Some(c.log_det())),
            None => (0.0, None),
        };
        let base_shape = 1.5 * n + self.prior.n0 / 2.0;
        let rate = r.sum() + self.prior.t0 / 2.0 + least_squares / 2.0;
        let design_bound = log_det_gram.filter(|&ld| {
            let shape = base_shape - p / 2.0;
            let typical = rate / (shape + 1.0);
            shape > 0.0 && ld - self.log_det_prior_precision - p * typical.ln() >= 0.0
        });
        let shape = if design_bound.is_some() { base_shape - p / 2.0 } else { base_shape };
        for _ in 0..self.rejection_cap {
            let sigma = sample_inverse_gamma(shape, rate, rng)?;
            let m = &self.prior_precision + (self.w.transpose() * &weighted) / sigma;
            let chol = Cholesky::new(&m)?;
            let wed = &wd / sigma;
            let quad = dd / sigma - wed.dot(&chol.solve(&wed));
            let bound = match design_bound {
                Some(ld) => 0.5 * ld - 0.5 * p * sigma.ln(),
                None => 0.5 * self.log_det_prior_precision,
            };
            let log_accept = -0.5 * chol.log_det() + bound - 0.5 * (quad - least_squares / sigma);
            if rng.random::<f64>().ln() <= log_accept {
                return Ok(sigma);
            }
        }
        Err(Error::RejectionCap {
            attempts: self.rejection_cap,
            context: "quantile-regression scale element".into(),
        })
    }
}

impl TwoBlockModel for QuantRegModel {
    type U = DVector<f64>;
    type V = DVector<f64>;
    type Latent = f64;

    fn draw_latent(&self, beta: &DVector<f64>, r: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
        check_rows("beta", beta.len(), self.w.ncols())?;
        check_rows("mixing scales", r.len(), self.observations())?;
        Self::check_scales(r)?;
        let (shape, rate) = self.sigma_conditional(beta, r);
        sample_inverse_gamma(shape, rate, rng)
    }

    fn draw_u(&self, r: &DVector<f64>, sigma: &f64, rng: &mut RngStream) -> Result<DVector<f64>> {
        Self::check_scales(r)?;
        let inv_var = r.map(|ri| 1.0 / (sigma * self.tau2 * ri));
        let weighted = DMatrix::from_fn(self.w.nrows(), self.w.ncols(), |i, j| self.w[(i, j)] * inv_var[i]);
        let precision = &self.prior_precision + self.w.transpose() * &weighted;
        let shifted = &self.z - r * self.theta;
        let b = weighted.transpose() * shifted + &self.prior_shift;
        Ok(sample_canonical_gaussian(&Cholesky::new(&precision)?, &b, rng))
    }

    fn draw_v(&self, beta: &DVector<f64>, sigma: &f64, rng: &mut RngStream) -> Result<DVector<f64>> {
        if !(*sigma > 0.0) {
            return Err(Error::param(format!("sigma must be positive, got {sigma}")));
        }
        let resid = &self.z - &self.w * beta;
        let draws = resid
            .iter()
            .map(|&e| {
                let (p, a, b) = self.scale_conditional(e, *sigma);
                sample_generalized_inverse_gaussian(p, a, b, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(draws))
    }
}

pub fn quantreg_two_block_step(model: &QuantRegModel, x: &QuantRegState, rng: &mut RngStream) -> Result<QuantRegState> {
    two_block_da_step(model, x, rng)
}

/// Two-block Haar PX-DA with the positive reals scaling `sigma`.
pub fn quantreg_two_block_pxda_step(
    model: &QuantRegModel,
    variant: TwoBlockVariant,
    x: &QuantRegState,
    rng: &mut RngStream,
) -> Result<QuantRegState> {
    let draw = |_: &ScaleGroup, beta: &DVector<f64>, r: &DVector<f64>, sigma: &f64, rr: &mut RngStream| {
        model.draw_scale_element(variant, beta, r, *sigma, rr)
    };
    two_block_pxda_step(model, &ScaleGroup::new(1), draw, x, rng)
}
