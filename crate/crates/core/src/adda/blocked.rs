//! Latent variables split into conditionally independent blocks, each
//! drawable on its own given the parameter.

use std::fmt::Debug;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::kernel::{AugmentedModel, TraceRow};
use crate::models::{LassoModel, LogisticModel, RegressionState};
use crate::oracle::{draw_index, DiscreteBlockedJoint, DiscreteJoint};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Tolerance for the exact factorization check on discrete joints.
pub const FACTORIZATION_TOL: f64 = 1e-12;

/// An augmented model whose latent variable is `(y^1, .., y^k)` with the
/// blocks conditionally independent given the state.
pub trait BlockedAugmentedModel: AugmentedModel<State: Send + Debug + TraceRow + 'static> + Sync {
    type Block: Clone + Send + Debug + TraceRow + 'static;

    fn block_count(&self) -> usize;

    /// Number of separately drawn items in block `j`; preemption is checked
    /// before each one.
    fn block_len(&self, j: usize) -> usize;

    /// Observation indices that block `j`'s conditional may depend on.
    fn data_subset(&self, j: usize) -> Vec<usize>;

    fn split_latent(&self, y: &Self::Latent) -> Vec<Self::Block>;

    fn join_latent(&self, blocks: &[Self::Block]) -> Self::Latent;

    /// Draws `y^j ~ f(y^j | x)`, calling `preempted` before every item.
    /// Returns `None` as soon as it reports `true`; nothing partial is
    /// returned.
    fn draw_block(
        &self,
        j: usize,
        x: &Self::State,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<Self::Block>>;

    /// Status of the conditional-independence requirement.
    fn independence(&self) -> BlockIndependence {
        BlockIndependence::Waived("blocks are conditionally independent by the model's construction".into())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockIndependence {
    /// Checked exactly; the largest deviation of `f(y | x)` from the product
    /// of its block marginals.
    Verified { max_deviation: f64 },
    Waived(String),
}

/// `max |f(y | x) - prod_j f(y^j | x)|` over all `(x, y)`, with the block
/// marginals computed from `joint` itself. The latent grid of `joint` is the
/// mixed-radix product of `block_sizes`, first block most significant.
pub fn factorization_deviation(joint: &DiscreteJoint, block_sizes: &[usize]) -> Result<f64> {
    let total: usize = block_sizes.iter().product();
    if total != joint.sy() || block_sizes.contains(&0) {
        return Err(Error::param(format!(
            "block sizes {block_sizes:?} do not tile a latent grid of {}",
            joint.sy()
        )));
    }
    let cond = joint.y_given_x();
    let digits = |mut idx: usize| {
        let mut d = vec![0; block_sizes.len()];
        for j in (0..block_sizes.len()).rev() {
            d[j] = idx % block_sizes[j];
            idx /= block_sizes[j];
        }
        d
    };
    let mut worst = 0.0f64;
    for x in 0..joint.sx() {
        let mut marginals: Vec<Vec<f64>> = block_sizes.iter().map(|&s| vec![0.0; s]).collect();
        for y in 0..total {
            for (j, d) in digits(y).into_iter().enumerate() {
                marginals[j][d] += cond[(x, y)];
            }
        }
        for y in 0..total {
            let product: f64 = digits(y).into_iter().enumerate().map(|(j, d)| marginals[j][d]).product();
            worst = worst.max((cond[(x, y)] - product).abs());
        }
    }
    Ok(worst)
}

impl BlockedAugmentedModel for DiscreteBlockedJoint {
    type Block = usize;

    fn block_count(&self) -> usize {
        self.block_sizes().len()
    }

    fn block_len(&self, _j: usize) -> usize {
        1
    }

    fn data_subset(&self, _j: usize) -> Vec<usize> {
        Vec::new()
    }

    fn split_latent(&self, y: &Vec<usize>) -> Vec<usize> {
        y.clone()
    }

    fn join_latent(&self, blocks: &[usize]) -> Vec<usize> {
        blocks.to_vec()
    }

    fn draw_block(
        &self,
        j: usize,
        x: &usize,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<usize>> {
        if preempted() {
            return Ok(None);
        }
        Ok(Some(draw_index(self.block(j).row(*x).iter().copied(), rng)))
    }

    fn independence(&self) -> BlockIndependence {
        let joint = DiscreteJoint::new(self.flattened_joint()).expect("flattened joint is a pmf");
        let max_deviation = factorization_deviation(&joint, &self.block_sizes()).expect("sizes tile the grid");
        BlockIndependence::Verified { max_deviation }
    }
}

/// Models whose latent items can be split into contiguous ranges.
pub trait Partitionable {
    fn item_count(&self) -> usize;
}

impl Partitionable for LassoModel {
    fn item_count(&self) -> usize {
        self.design().ncols()
    }
}

impl Partitionable for LogisticModel {
    fn item_count(&self) -> usize {
        self.design().nrows()
    }
}

/// A model with its latent items partitioned into contiguous blocks.
#[derive(Clone, Debug)]
pub struct Blocked<M> {
    model: M,
    ranges: Vec<Range<usize>>,
}

impl<M: Partitionable> Blocked<M> {
    /// `blocks` contiguous ranges whose sizes differ by at most one.
    pub fn even(model: M, blocks: usize) -> Result<Self> {
        let n = model.item_count();
        if blocks == 0 || blocks > n {
            return Err(Error::param(format!("cannot split {n} latent items into {blocks} blocks")));
        }
        let ranges = (0..blocks).map(|j| (j * n / blocks)..((j + 1) * n / blocks)).collect();
        Ok(Self { model, ranges })
    }

    /// Explicit ranges; they must tile `0..item_count` in order.
    pub fn with_ranges(model: M, ranges: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for r in &ranges {
            if r.start != next || r.end <= r.start {
                return Err(Error::param(format!("block ranges {ranges:?} do not tile the latent items in order")));
            }
            next = r.end;
        }
        if next != model.item_count() || ranges.is_empty() {
            return Err(Error::param(format!("block ranges {ranges:?} do not cover {} items", model.item_count())));
        }
        Ok(Self { model, ranges })
    }
}

impl<M> Blocked<M> {
    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    fn split_vector(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        self.ranges.iter().map(|r| y.rows(r.start, r.len()).into_owned()).collect()
    }

    fn join_vector(blocks: &[DVector<f64>]) -> DVector<f64> {
        DVector::from_iterator(blocks.iter().map(|b| b.len()).sum(), blocks.iter().flat_map(|b| b.iter().copied()))
    }
}

impl<M: AugmentedModel> AugmentedModel for Blocked<M> {
    type State = M::State;
    type Latent = M::Latent;

    fn draw_latent(&self, x: &M::State, rng: &mut RngStream) -> Result<M::Latent> {
        self.model.draw_latent(x, rng)
    }

    fn draw_state(&self, y: &M::Latent, rng: &mut RngStream) -> Result<M::State> {
        self.model.draw_state(y, rng)
    }

    fn log_joint(&self, x: &M::State, y: &M::Latent) -> Option<f64> {
        self.model.log_joint(x, y)
    }

    fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    fn latent_dim(&self) -> usize {
        self.model.latent_dim()
    }
}

impl BlockedAugmentedModel for Blocked<LassoModel> {
    type Block = DVector<f64>;

    fn block_count(&self) -> usize {
        self.ranges.len()
    }

    fn block_len(&self, j: usize) -> usize {
        self.ranges[j].len()
    }

    /// The latent scale of `beta_j` depends on `(beta_j, sigma^2)` only.
    fn data_subset(&self, _j: usize) -> Vec<usize> {
        Vec::new()
    }

    fn split_latent(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        self.split_vector(y)
    }

    fn join_latent(&self, blocks: &[DVector<f64>]) -> DVector<f64> {
        Self::join_vector(blocks)
    }

    fn draw_block(
        &self,
        j: usize,
        x: &RegressionState,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<DVector<f64>>> {
        self.model.draw_latent_range(x, self.ranges[j].clone(), rng, preempted)
    }
}

impl BlockedAugmentedModel for Blocked<LogisticModel> {
    type Block = DVector<f64>;

    fn block_count(&self) -> usize {
        self.ranges.len()
    }

    fn block_len(&self, j: usize) -> usize {
        self.ranges[j].len()
    }

    fn data_subset(&self, j: usize) -> Vec<usize> {
        self.ranges[j].clone().collect()
    }

    fn split_latent(&self, y: &DVector<f64>) -> Vec<DVector<f64>> {
        self.split_vector(y)
    }

    fn join_latent(&self, blocks: &[DVector<f64>]) -> DVector<f64> {
        Self::join_vector(blocks)
    }

    fn draw_block(
        &self,
        j: usize,
        beta: &DVector<f64>,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<DVector<f64>>> {
        if beta.len() != self.model.design().ncols() {
            return Err(Error::param(format!(
                "beta has length {}, expected {}",
                beta.len(),
                self.model.design().ncols()
            )));
        }
        let range = self.ranges[j].clone();
        let mut out = DVector::zeros(range.len());
        for (k, i) in range.enumerate() {
            if preempted() {
                return Ok(None);
            }
            out[k] = self.model.draw_latent_item(i, beta, rng)?;
        }
        Ok(Some(out))
    }
}

/// Models that can be rebuilt with some observations altered, for the
/// data-locality check.
pub trait PerturbData: Sized {
    fn observation_count(&self) -> usize;
    fn perturb_observations(&self, indices: &[usize], rng: &mut RngStream) -> Result<Self>;
}

impl PerturbData for Blocked<LassoModel> {
    fn observation_count(&self) -> usize {
        self.model.design().nrows()
    }

    fn perturb_observations(&self, indices: &[usize], rng: &mut RngStream) -> Result<Self> {
        let mut z = self.model.centered_response().clone();
        for &i in indices {
            z[i] += 1.0 + rng.sample::<f64, _>(StandardNormal);
        }
        let model = LassoModel::new(self.model.design().clone(), &z, self.model.lambda(), self.model.variance_prior())?;
        Ok(Self { model, ranges: self.ranges.clone() })
    }
}

impl PerturbData for Blocked<LogisticModel> {
    fn observation_count(&self) -> usize {
        self.model.design().nrows()
    }

    fn perturb_observations(&self, indices: &[usize], rng: &mut RngStream) -> Result<Self> {
        let m = &self.model;
        let mut w: DMatrix<f64> = m.design().clone();
        let mut successes = m.successes().to_vec();
        for &i in indices {
            for c in 0..w.ncols() {
                w[(i, c)] += 1.0 + rng.sample::<f64, _>(StandardNormal);
            }
            successes[i] = m.trials()[i] - successes[i];
        }
        // The original model already passed the propriety gate.
        let model = LogisticModel::new(w, successes, m.trials().to_vec(), m.prior().clone(), true)?;
        Ok(Self { model, ranges: self.ranges.clone() })
    }
}

/// Perturbs every observation outside block `j`'s data subset and checks
/// that the block draw is bit-for-bit unchanged under a fixed stream, for
/// every block.
pub fn check_block_locality<M>(model: &M, x: &M::State, seed: u64) -> Result<()>
where
    M: BlockedAugmentedModel + PerturbData,
{
    let mut perturb_rng = RngStream::new(seed, u64::MAX);
    for j in 0..model.block_count() {
        let inside = model.data_subset(j);
        let outside: Vec<usize> = (0..model.observation_count()).filter(|i| !inside.contains(i)).collect();
        if outside.is_empty() {
            continue;
        }
        let other = model.perturb_observations(&outside, &mut perturb_rng)?;
        let draw = |m: &M| -> Result<Vec<f64>> {
            let mut rng = RngStream::new(seed, j as u64);
            let block = m.draw_block(j, x, &mut rng, &mut || false)?.expect("never preempted");
            Ok(block.row())
        };
        let (a, b) = (draw(model)?, draw(&other)?);
        if a.iter().zip(&b).any(|(u, v)| u.to_bits() != v.to_bits()) || a.len() != b.len() {
            return Err(Error::InvalidModel(format!("block {j} depends on observations outside its data subset")));
        }
    }
    Ok(())
}
