//! Exact finite-state counterparts of the kernels, and the spectral and
//! operator checks run on them.

mod continuous;
mod discrete_models;
mod frequency;
mod joint;
mod matrix;
mod spectrum;
mod theorems;
mod verify;

pub use continuous::{
    compactness_diagnostics, hilbert_schmidt_integral, nystrom_eigenvalues, trace_integral, CompactnessReport,
    ContinuousKernel, ConvergenceStatus, ConvergenceSummary, GaussianToy, Grid, RefinementLevel,
};
pub use discrete_models::{DiscreteBlockedJoint, DiscreteTwoBlock, TwoBlockVariant};
pub use frequency::{transition_frequencies, FrequencyReport};
pub use joint::DiscreteJoint;
pub(crate) use joint::draw_index;
pub use matrix::{
    build_da_kernel, build_sandwich_kernel, check_detailed_balance, check_middle_invariance,
    stationary_distribution, TransitionMatrix,
};
pub use spectrum::{
    mean_zero_eigenvalues, singular_relation_residual, spectrum, spectrum_of_joint, svd_triplets,
    weighted_dot, SingularTriplet, SpectrumKind, SpectrumReport,
};
pub use theorems::{
    check_idempotent_middle, haar_middle_kernel, haar_triviality_check, projection_middle_kernel,
    verify_dominance, DominanceReport, EqualityCheck, HaarTrivialityReport,
};
pub use verify::{run_verification, CheckOutcome, Mutation, Suite, VerifyOptions, VerifyReport};
