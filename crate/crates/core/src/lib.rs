//! Data-augmentation MCMC.
//!
//! * [`distributions`]: exact samplers and densities for the non-standard
//!   families the augmentation schemes need.
//! * [`kernel`]: DA, sandwich, Haar PX-DA and two-block kernels over any
//!   [`kernel::AugmentedModel`], and the chain runner.
//! * [`models`]: lasso, elastic net, Pólya-Gamma logistic, probit GLMM,
//!   robit and quantile regression.
//! * [`adda`]: the asynchronous distributed DA engine.
//! * [`oracle`]: exact finite-state kernels, spectra and operator checks.
//! * [`diagnostics`]: autocorrelation, batch means and effective sample size.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adda;
pub mod diagnostics;
pub mod distributions;
mod error;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use rng::RngStream;
