//! Finite-state models whose exact kernels can be enumerated: a
//! three-variable joint for two-block samplers and a conditionally
//! independent blocked joint for the distributed engine.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::joint::draw_index;
use super::matrix::TransitionMatrix;
use crate::kernel::{GroupAction, PermutationGroup, TwoBlockModel};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Joint pmf of `(u, v, y)` on finite grids.
#[derive(Clone, Debug)]
pub struct DiscreteTwoBlock {
    su: usize,
    sv: usize,
    sy: usize,
    pmf: Vec<f64>,
}

/// Which group density the two-block PX-DA middle step draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoBlockVariant {
    /// `g` proportional to `f_{V,Y}(v, gy) chi(g) nu_l(g)`.
    MarginalOverU,
    /// `g` proportional to `f_{U,V,Y}(u, v, gy) chi(g) nu_l(g)`.
    Full,
}

impl TwoBlockVariant {
    pub fn from_index(j: u8) -> Result<Self> {
        match j {
            1 => Ok(Self::MarginalOverU),
            2 => Ok(Self::Full),
            _ => Err(Error::param(format!("two-block PX-DA variant must be 1 or 2, got {j}"))),
        }
    }
}

impl DiscreteTwoBlock {
    pub fn from_weights(su: usize, sv: usize, sy: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != su * sv * sy {
            return Err(Error::param("weight count does not match grid sizes"));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidModel("two-block joint weights must be strictly positive".into()));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            su,
            sv,
            sy,
            pmf: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn random(su: usize, sv: usize, sy: usize, rng: &mut RngStream) -> Self {
        let w = (0..su * sv * sy).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
        Self::from_weights(su, sv, sy, w).expect("positive weights")
    }

    pub fn p(&self, u: usize, v: usize, y: usize) -> f64 {
        self.pmf[(u * self.sv + v) * self.sy + y]
    }

    pub fn state_count(&self) -> usize {
        self.su * self.sv
    }

    pub fn y_count(&self) -> usize {
        self.sy
    }

    pub fn state_index(&self, u: usize, v: usize) -> usize {
        u * self.sv + v
    }

    pub fn x_marginal(&self) -> DVector<f64> {
        DVector::from_fn(self.state_count(), |x, _| {
            let (u, v) = (x / self.sv, x % self.sv);
            (0..self.sy).map(|y| self.p(u, v, y)).sum()
        })
    }

    fn vy_marginal(&self, v: usize, y: usize) -> f64 {
        (0..self.su).map(|u| self.p(u, v, y)).sum()
    }

    fn cond_y(&self, u: usize, v: usize) -> Vec<f64> {
        normalize((0..self.sy).map(|y| self.p(u, v, y)).collect())
    }

    fn cond_u(&self, v: usize, y: usize) -> Vec<f64> {
        normalize((0..self.su).map(|u| self.p(u, v, y)).collect())
    }

    fn cond_v(&self, u: usize, y: usize) -> Vec<f64> {
        normalize((0..self.sv).map(|v| self.p(u, v, y)).collect())
    }

    /// Unnormalized group-element weights for the chosen variant.
    pub fn element_weights(&self, group: &PermutationGroup, variant: TwoBlockVariant, u: usize, v: usize, y: usize) -> Vec<f64> {
        group
            .elements()
            .map(|g| {
                let gy = group.act(&g, &y);
                let f = match variant {
                    TwoBlockVariant::MarginalOverU => self.vy_marginal(v, gy),
                    TwoBlockVariant::Full => self.p(u, v, gy),
                };
                f * group.multiplier(&g) * group.log_haar_density(&g).exp()
            })
            .collect()
    }

    /// Exact element draw for the two-block PX-DA middle step.
    pub fn draw_element(
        &self,
        group: &PermutationGroup,
        variant: TwoBlockVariant,
        u: usize,
        v: usize,
        y: usize,
        rng: &mut RngStream,
    ) -> Result<usize> {
        if group.order() == 1 {
            return Ok(group.identity());
        }
        let w = self.element_weights(group, variant, u, v, y);
        Ok(draw_index(w.iter().copied(), rng))
    }

    /// Exact kernel of the two-block DA chain on `x = (u, v)`.
    pub fn two_block_kernel(&self) -> TransitionMatrix {
        self.kernel_with(|_, _, y| vec![(y, 1.0)])
    }

    /// Exact kernel of the two-block Haar PX-DA chain.
    pub fn two_block_pxda_kernel(&self, group: &PermutationGroup, variant: TwoBlockVariant) -> Result<TransitionMatrix> {
        if group.grid_size() != self.sy {
            return Err(Error::param("group does not act on the y grid"));
        }
        Ok(self.kernel_with(|u, v, y| {
            let w = self.element_weights(group, variant, u, v, y);
            let total: f64 = w.iter().sum();
            group.elements().map(|g| (group.act(&g, &y), w[g] / total)).collect()
        }))
    }

    fn kernel_with(&self, middle: impl Fn(usize, usize, usize) -> Vec<(usize, f64)>) -> TransitionMatrix {
        let n = self.state_count();
        let mut k = DMatrix::zeros(n, n);
        for u in 0..self.su {
            for v in 0..self.sv {
                let from = self.state_index(u, v);
                let py = self.cond_y(u, v);
                for (y, pyv) in py.iter().enumerate() {
                    for (y2, pm) in middle(u, v, y) {
                        let pu = self.cond_u(v, y2);
                        for (u2, puv) in pu.iter().enumerate() {
                            let pv = self.cond_v(u2, y2);
                            for (v2, pvv) in pv.iter().enumerate() {
                                k[(from, self.state_index(u2, v2))] += pyv * pm * puv * pvv;
                            }
                        }
                    }
                }
            }
        }
        TransitionMatrix::new(k).expect("composition of stochastic kernels")
    }
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

impl TwoBlockModel for DiscreteTwoBlock {
    type U = usize;
    type V = usize;
    type Latent = usize;

    fn draw_latent(&self, u: &usize, v: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index((0..self.sy).map(|y| self.p(*u, *v, y)), rng))
    }

    fn draw_u(&self, v: &usize, y: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index((0..self.su).map(|u| self.p(u, *v, *y)), rng))
    }

    fn draw_v(&self, u: &usize, y: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index((0..self.sv).map(|v| self.p(*u, v, *y)), rng))
    }
}

/// `f(x, y^1, .., y^k) = f_X(x) prod_j f_j(y^j | x)`: latent blocks that
/// are conditionally independent given `x` by construction.
#[derive(Clone, Debug)]
pub struct DiscreteBlockedJoint {
    fx: DVector<f64>,
    blocks: Vec<DMatrix<f64>>,
}

impl DiscreteBlockedJoint {
    /// `blocks[j][(x, y)] = f_j(y | x)`; rows must be probability vectors.
    pub fn new(fx: DVector<f64>, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if (fx.sum() - 1.0).abs() > 1e-12 || fx.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidModel("x marginal must be a strictly positive pmf".into()));
        }
        for (j, b) in blocks.iter().enumerate() {
            if b.nrows() != fx.len() {
                return Err(Error::InvalidModel(format!("block {j} has {} rows, expected {}", b.nrows(), fx.len())));
            }
            for r in b.row_iter() {
                if (r.sum() - 1.0).abs() > 1e-12 || r.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidModel(format!("block {j} conditional is not a pmf")));
                }
            }
        }
        if blocks.is_empty() {
            return Err(Error::InvalidModel("at least one latent block is required".into()));
        }
        Ok(Self { fx, blocks })
    }

    pub fn random(sx: usize, block_sizes: &[usize], rng: &mut RngStream) -> Self {
        let fx = normalize((0..sx).map(|_| rng.sample::<f64, _>(Exp1) + 1e-2).collect());
        let blocks = block_sizes
            .iter()
            .map(|&s| {
                let mut m = DMatrix::from_fn(sx, s, |_, _| rng.sample::<f64, _>(Exp1) + 1e-2);
                for mut r in m.row_iter_mut() {
                    let t = r.sum();
                    r /= t;
                }
                m
            })
            .collect();
        Self::new(DVector::from_vec(fx), blocks).expect("valid by construction")
    }

    pub fn sx(&self) -> usize {
        self.fx.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }

    pub fn block(&self, j: usize) -> &DMatrix<f64> {
        &self.blocks[j]
    }

    pub fn x_marginal(&self) -> &DVector<f64> {
        &self.fx
    }

    pub fn latent_count(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).product()
    }

    /// Mixed-radix index of a latent vector, first block most significant.
    pub fn latent_index(&self, y: &[usize]) -> usize {
        y.iter().zip(&self.blocks).fold(0, |acc, (yj, b)| acc * b.ncols() + yj)
    }

    pub fn latent_from_index(&self, mut idx: usize) -> Vec<usize> {
        let mut y = vec![0; self.blocks.len()];
        for j in (0..self.blocks.len()).rev() {
            let s = self.blocks[j].ncols();
            y[j] = idx % s;
            idx /= s;
        }
        y
    }

    pub fn density(&self, x: usize, y: &[usize]) -> f64 {
        self.fx[x] * y.iter().zip(&self.blocks).map(|(yj, b)| b[(x, *yj)]).product::<f64>()
    }

    /// Joint pmf over `(x, y)` pairs, indexed `x * latent_count + y`.
    pub fn joint_vector(&self) -> DVector<f64> {
        let ny = self.latent_count();
        DVector::from_fn(self.sx() * ny, |i, _| self.density(i / ny, &self.latent_from_index(i % ny)))
    }

    /// `f(y | x)` over whole latent vectors.
    pub fn latent_given_state(&self, x: usize) -> Vec<f64> {
        (0..self.latent_count())
            .map(|i| self.density(x, &self.latent_from_index(i)) / self.fx[x])
            .collect()
    }

    pub fn state_given_latent(&self, y: &[usize]) -> Vec<f64> {
        normalize((0..self.sx()).map(|x| self.density(x, y)).collect())
    }

    /// Joint matrix of `(x, y)` where `y` is the whole latent vector.
    pub fn flattened_joint(&self) -> DMatrix<f64> {
        let ny = self.latent_count();
        DMatrix::from_fn(self.sx(), ny, |x, i| self.density(x, &self.latent_from_index(i)))
    }
}

impl crate::kernel::AugmentedModel for DiscreteBlockedJoint {
    type State = usize;
    type Latent = Vec<usize>;

    fn draw_latent(&self, x: &usize, rng: &mut RngStream) -> Result<Vec<usize>> {
        Ok(self.blocks.iter().map(|b| draw_index(b.row(*x).iter().copied(), rng)).collect())
    }

    fn draw_state(&self, y: &Vec<usize>, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index((0..self.sx()).map(|x| self.density(x, y)), rng))
    }

    fn log_joint(&self, x: &usize, y: &Vec<usize>) -> Option<f64> {
        Some(self.density(*x, y).ln())
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn latent_dim(&self) -> usize {
        self.blocks.len()
    }
}
