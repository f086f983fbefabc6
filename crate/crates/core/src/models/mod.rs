//! Concrete augmented models. Each exposes its exact conditional samplers
//! through [`crate::kernel::AugmentedModel`] or
//! [`crate::kernel::TwoBlockModel`], plus an unnormalized log posterior for
//! oracle checks.

pub mod design;
mod logistic;
mod probit;
mod quantreg;
mod robit;
mod shrinkage;

pub use logistic::{pg_logistic_da_step, GaussianPrior, LogisticModel};
pub use probit::{
    probit_glmm_da_step, probit_haar_pxda_step, probit_log_element_density, random_effect_covariance,
    ProbitGlmmModel, RandomEffectBlock,
};
pub use quantreg::{
    quantile_tau2, quantile_theta, quantreg_two_block_pxda_step, quantreg_two_block_step, QuantRegModel,
    QuantRegPrior, QuantRegState, DEFAULT_REJECTION_CAP,
};
pub use robit::{robit_da_step, RobitLatent, RobitModel};
pub use shrinkage::{
    elastic_net_da_step, lasso_da_step, ElasticNetModel, LassoModel, RegressionState, VariancePrior,
    ZERO_COEFFICIENT_RATIO,
};
