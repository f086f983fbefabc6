use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use crate::kernel::AugmentedModel;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Exact joint pmf on a finite `x` grid times a finite `y` grid.
#[derive(Clone, Debug)]
pub struct DiscreteJoint {
    pmf: DMatrix<f64>,
    x_marginal: DVector<f64>,
    y_marginal: DVector<f64>,
}

impl DiscreteJoint {
    /// `pmf[(x, y)]`; entries must be non-negative and sum to one within
    /// `1e-14`, and every marginal state must carry mass.
    pub fn new(pmf: DMatrix<f64>) -> Result<Self> {
        if pmf.nrows() == 0 || pmf.ncols() == 0 {
            return Err(Error::InvalidModel("empty joint".into()));
        }
        if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidModel("joint pmf has negative or non-finite entries".into()));
        }
        let total = pmf.sum();
        if (total - 1.0).abs() > 1e-14 * (pmf.len() as f64).max(1.0) {
            return Err(Error::InvalidModel(format!("joint pmf sums to {total}")));
        }
        let x_marginal = DVector::from_iterator(pmf.nrows(), pmf.row_iter().map(|r| r.sum()));
        let y_marginal = DVector::from_iterator(pmf.ncols(), pmf.column_iter().map(|c| c.sum()));
        if let Some(i) = x_marginal.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidModel(format!("x state {i} has zero marginal mass")));
        }
        if let Some(j) = y_marginal.iter().position(|&p| p <= 0.0) {
            return Err(Error::InvalidModel(format!("y state {j} has zero marginal mass")));
        }
        Ok(Self {
            pmf,
            x_marginal,
            y_marginal,
        })
    }

    /// Normalizes non-negative weights into a joint.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let total = weights.sum();
        if !(total > 0.0) {
            return Err(Error::InvalidModel("weights have no mass".into()));
        }
        let mut pmf = weights / total;
        // Push the rounding residue into the largest cell.
        let residue = 1.0 - pmf.sum();
        let imax = pmf.iamax_full();
        pmf[imax] += residue;
        Self::new(pmf)
    }

    /// Random joint with Exp(1) cell weights. Without `strictly_positive`
    /// about a quarter of the cells are zeroed (marginals stay positive).
    pub fn random(sx: usize, sy: usize, strictly_positive: bool, rng: &mut RngStream) -> Self {
        loop {
            let w = DMatrix::from_fn(sx, sy, |_, _| {
                let e: f64 = rng.sample(Exp1);
                if !strictly_positive && rng.random::<f64>() < 0.25 {
                    0.0
                } else {
                    e
                }
            });
            if let Ok(j) = Self::from_weights(w) {
                return j;
            }
        }
    }

    /// Product of the two marginals.
    pub fn independent(fx: &DVector<f64>, fy: &DVector<f64>) -> Result<Self> {
        Self::from_weights(fx * fy.transpose())
    }

    pub fn sx(&self) -> usize {
        self.pmf.nrows()
    }

    pub fn sy(&self) -> usize {
        self.pmf.ncols()
    }

    pub fn pmf(&self) -> &DMatrix<f64> {
        &self.pmf
    }

    pub fn x_marginal(&self) -> &DVector<f64> {
        &self.x_marginal
    }

    pub fn y_marginal(&self) -> &DVector<f64> {
        &self.y_marginal
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.pmf.iter().all(|&p| p > 0.0)
    }

    /// `f(y | x)` with rows indexed by `x`.
    pub fn y_given_x(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.sx(), self.sy(), |x, y| self.pmf[(x, y)] / self.x_marginal[x])
    }

    /// `f(x | y)` with rows indexed by `y`.
    pub fn x_given_y(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.sy(), self.sx(), |y, x| self.pmf[(x, y)] / self.y_marginal[y])
    }
}

/// Categorical draw from a probability row.
pub(crate) fn draw_index(weights: impl Iterator<Item = f64> + Clone, rng: &mut RngStream) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    last
}

impl AugmentedModel for DiscreteJoint {
    type State = usize;
    type Latent = usize;

    fn draw_latent(&self, x: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index(self.pmf.row(*x).iter().copied(), rng))
    }

    fn draw_state(&self, y: &usize, rng: &mut RngStream) -> Result<usize> {
        Ok(draw_index(self.pmf.column(*y).iter().copied(), rng))
    }

    fn log_joint(&self, x: &usize, y: &usize) -> Option<f64> {
        Some(self.pmf[(*x, *y)].ln())
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn latent_dim(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditionals_are_consistent_with_the_joint() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..20 {
            let j = DiscreteJoint::random(4, 6, false, &mut rng);
            let a = j.y_given_x();
            let b = j.x_given_y();
            for x in 0..4 {
                for y in 0..6 {
                    let p = j.pmf()[(x, y)];
                    assert!((a[(x, y)] * j.x_marginal()[x] - p).abs() < 1e-15);
                    assert!((b[(y, x)] * j.y_marginal()[y] - p).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_pmfs() {
        assert!(DiscreteJoint::new(DMatrix::from_row_slice(1, 2, &[0.5, 0.6])).is_err());
        assert!(DiscreteJoint::new(DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 0.0])).is_err());
        assert!(DiscreteJoint::new(DMatrix::from_row_slice(1, 2, &[1.5, -0.5])).is_err());
    }
}
