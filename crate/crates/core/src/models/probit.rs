//! Probit generalized linear mixed model: sampling the random effects given
//! fixed effects and variance components, by truncated-normal augmentation
//! and its scale-group Haar PX-DA improvement.

use nalgebra::{DMatrix, DVector};

use super::design::{check_rows, check_square};
use crate::distributions::{sample_truncated_normal, LogConcaveRejection, Side};
use crate::kernel::{da_step, haar_pxda_step, AugmentedModel, GroupAction, ScaleGroup};
use crate::linalg::{sample_canonical_gaussian, Cholesky};
use crate::rng::RngStream;
use crate::{Error, Result};

/// One random-effect term with covariance `lambda ⊗ structure`.
#[derive(Clone, Debug)]
pub struct RandomEffectBlock {
    pub lambda: DMatrix<f64>,
    pub structure: DMatrix<f64>,
}

impl RandomEffectBlock {
    pub fn new(lambda: DMatrix<f64>, structure: DMatrix<f64>) -> Result<Self> {
        check_square("lambda", &lambda, lambda.nrows())?;
        check_square("structure matrix", &structure, structure.nrows())?;
        Cholesky::new(&lambda)?;
        Cholesky::new(&structure)?;
        Ok(Self { lambda, structure })
    }

    /// Scalar variance `tau2` on a single effect.
    pub fn scalar(tau2: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, tau2), DMatrix::identity(1, 1))
    }

    pub fn dim(&self) -> usize {
        self.lambda.nrows() * self.structure.nrows()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.lambda.kronecker(&self.structure)
    }
}

/// `A = ⊕_j lambda_j ⊗ R_j`, materialized densely.
pub fn random_effect_covariance(blocks: &[RandomEffectBlock]) -> DMatrix<f64> {
    let q = blocks.iter().map(|b| b.dim()).sum();
    let mut a = DMatrix::zeros(q, q);
    let mut at = 0;
    for b in blocks {
        let d = b.dim();
        a.view_mut((at, at), (d, d)).copy_from(&b.covariance());
        at += d;
    }
    a
}

#[derive(Clone, Debug)]
pub struct ProbitGlmmModel {
    v: DMatrix<f64>,
    z: Vec<bool>,
    offset: DVector<f64>,
    a_inv: DMatrix<f64>,
    posterior_precision: Cholesky,
    v1: DMatrix<f64>,
    v1_offset: DVector<f64>,
    scale_group: ScaleGroup,
}

impl ProbitGlmmModel {
    /// `w` and `beta` give the fixed-effect offset `W beta`; `v` is the
    /// random-effect design.
    pub fn new(w: &DMatrix<f64>, v: DMatrix<f64>, beta: &DVector<f64>, blocks: &[RandomEffectBlock], z: Vec<bool>) -> Result<Self> {
        let m = v.nrows();
        check_rows("fixed-effect design", w.nrows(), m)?;
        check_rows("beta", beta.len(), w.ncols())?;
        check_rows("responses", z.len(), m)?;
        let a = random_effect_covariance(blocks);
        check_rows("random-effect columns", v.ncols(), a.nrows())?;
        if m == 0 {
            return Err(Error::InvalidModel("no observations".into()));
        }
        let a_inv = Cholesky::new(&a)?.inverse();
        let precision = v.transpose() * &v + &a_inv;
        let posterior_precision = Cholesky::new(&precision)?;
        let v1 = DMatrix::identity(m, m) - &v * posterior_precision.solve_matrix(&v.transpose());
        let v1 = (&v1 + v1.transpose()) * 0.5;
        let offset = w * beta;
        let v1_offset = &v1 * &offset;
        Ok(Self {
            v,
            z,
            offset,
            a_inv,
            posterior_precision,
            v1,
            v1_offset,
            scale_group: ScaleGroup::new(m),
        })
    }

    pub fn observations(&self) -> usize {
        self.v.nrows()
    }

    /// `V_1 = I - V (V'V + A^-1)^-1 V'`.
    pub fn v1(&self) -> &DMatrix<f64> {
        &self.v1
    }

    pub fn responses(&self) -> &[bool] {
        &self.z
    }

    /// Unnormalized log density of `u` given the data.
    pub fn log_posterior(&self, u: &DVector<f64>) -> f64 {
        let eta = &self.offset + &self.v * u;
        let lik: f64 = eta
            .iter()
            .zip(&self.z)
            .map(|(&e, &zi)| crate::distributions::ln_std_normal_cdf(if zi { e } else { -e }))
            .sum();
        lik - 0.5 * u.dot(&(&self.a_inv * u))
    }

    /// `(s, t) = (y' V_1 y, y' V_1 W beta)`, the coefficients of the
    /// scale-group density `g^(m-1) exp(-(g^2 s - 2 g t) / 2)`.
    pub fn scale_coefficients(&self, y: &DVector<f64>) -> (f64, f64) {
        (y.dot(&(&self.v1 * y)), y.dot(&self.v1_offset))
    }

    /// Exact draw of the scale-group element by log-concave rejection.
    pub fn draw_scale(&self, y: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
        let (s, t) = self.scale_coefficients(y);
        if !(s > 0.0) {
            return Err(Error::Precondition(format!("y' V_1 y = {s} is not positive")));
        }
        let m1 = (self.observations() - 1) as f64;
        let mode = (t + (t * t + 4.0 * s * m1).sqrt()) / (2.0 * s);
        let curvature = if mode > 0.0 { m1 / (mode * mode) + s } else { s };
        let log_density = move |g: f64| {
            if g <= 0.0 {
                if m1 == 0.0 && g == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                m1 * g.ln() - 0.5 * (g * g * s - 2.0 * g * t)
            }
        };
        LogConcaveRejection::new(log_density, mode, 1.0 / curvature.sqrt(), 0.0, f64::INFINITY)?.sample(rng)
    }

    pub fn scale_group(&self) -> &ScaleGroup {
        &self.scale_group
    }
}

impl AugmentedModel for ProbitGlmmModel {
    type State = DVector<f64>;
    type Latent = DVector<f64>;

    fn draw_latent(&self, u: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
        check_rows("random effects", u.len(), self.v.ncols())?;
        let eta = &self.offset + &self.v * u;
        let draws = eta
            .iter()
            .zip(&self.z)
            .map(|(&e, &zi)| sample_truncated_normal(e, 1.0, Side::from_indicator(zi), rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(draws))
    }

    fn draw_state(&self, y: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
        let b = self.v.transpose() * (y - &self.offset);
        Ok(sample_canonical_gaussian(&self.posterior_precision, &b, rng))
    }

    fn state_dim(&self) -> usize {
        self.v.ncols()
    }

    fn latent_dim(&self) -> usize {
        self.v.nrows()
    }
}

pub fn probit_glmm_da_step(model: &ProbitGlmmModel, u: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    da_step(model, u, rng)
}

/// DA with the middle move `y -> g y`, `g` drawn from the scale-group
/// density.
pub fn probit_haar_pxda_step(model: &ProbitGlmmModel, u: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    let draw = |_: &ScaleGroup, y: &DVector<f64>, r: &mut RngStream| model.draw_scale(y, r);
    haar_pxda_step(model, model.scale_group(), draw, u, rng)
}

/// The same element density written through the group interface, for
/// checking it against `f_Y(g y) chi(g) nu_l(g)`.
pub fn probit_log_element_density(model: &ProbitGlmmModel, y: &DVector<f64>, g: f64) -> f64 {
    let group = model.scale_group();
    let gy = group.act(&g, y);
    let log_fy = -0.5 * (gy.dot(&(model.v1() * &gy)) - 2.0 * gy.dot(&model.v1_offset));
    let chi = <ScaleGroup as GroupAction<DVector<f64>>>::multiplier(group, &g);
    log_fy + chi.ln() + <ScaleGroup as GroupAction<DVector<f64>>>::log_haar_density(group, &g)
}
