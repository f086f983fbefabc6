//! Model-agnostic Markov kernels built from an augmentation model's two
//! conditional samplers, plus the chain runner.

mod group;
mod model;
mod steps;
mod trace;

pub use group::{FiniteGroupSampler, GroupAction, PermutationGroup, ScaleGroup, TrivialGroup};
pub use model::{AugmentedModel, IdentityMiddle, MiddleKernel, TwoBlockModel};
pub use steps::{da_step, haar_pxda_step, sandwich_step, two_block_da_step, two_block_pxda_step};
pub use trace::{run_chain, ChainMeta, ChainTrace, TraceRow};
