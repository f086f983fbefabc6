use nalgebra::{DMatrix, DVector};

use super::joint::DiscreteJoint;
use crate::{Error, Result};

/// Row-stochastic matrix on a finite state grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    matrix: DMatrix<f64>,
}

pub const ROW_SUM_TOL: f64 = 1e-12;

impl TransitionMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::param("transition matrix must be square and non-empty"));
        }
        for (i, row) in matrix.row_iter().enumerate() {
            if row.iter().any(|&p| !(p >= -1e-15) || !p.is_finite()) {
                return Err(Error::param(format!("row {i} has a negative or non-finite entry")));
            }
            let s = row.sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::param(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        (&self.matrix - &other.matrix).amax()
    }
}

/// `k(x' | x) = sum_y f(x' | y) f(y | x)`.
pub fn build_da_kernel(joint: &DiscreteJoint) -> TransitionMatrix {
    TransitionMatrix::new(joint.y_given_x() * joint.x_given_y()).expect("composition of stochastic matrices")
}

/// Checks that `middle` is stochastic and leaves `f_Y` invariant.
pub fn check_middle_invariance(fy: &DVector<f64>, middle: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = fy.len();
    if middle.nrows() != n || middle.ncols() != n {
        return Err(Error::param(format!("middle kernel must be {n}x{n}")));
    }
    for (i, row) in middle.row_iter().enumerate() {
        let s = row.sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::Precondition(format!("middle kernel row {i} sums to {s}")));
        }
    }
    let pushed = middle.transpose() * fy;
    let err = (pushed - fy).amax();
    if err > tol {
        return Err(Error::Precondition(format!(
            "middle kernel does not leave f_Y invariant (max error {err:.3e})"
        )));
    }
    Ok(())
}

/// `k_SA(x' | x) = sum_{y, y'} f(x' | y') r(y' | y) f(y | x)`, gated on the
/// middle kernel leaving `f_Y` invariant.
pub fn build_sandwich_kernel(joint: &DiscreteJoint, middle: &DMatrix<f64>) -> Result<TransitionMatrix> {
    if middle.iter().any(|&p| p < 0.0) {
        return Err(Error::Precondition("middle kernel has negative entries".into()));
    }
    check_middle_invariance(joint.y_marginal(), middle, 1e-12)?;
    TransitionMatrix::new(joint.y_given_x() * middle * joint.x_given_y())
}

/// Left unit eigenvector normalized to a pmf, from the null space of
/// `(K - I)^T`. A second (near) zero singular value means the unit
/// eigenvalue is not simple.
pub fn stationary_distribution(kernel: &TransitionMatrix) -> Result<DVector<f64>> {
    let n = kernel.size();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let m = (kernel.matrix() - DMatrix::identity(n, n)).transpose();
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let tol = 1e-10;
    if svd.singular_values[order[1]] < tol {
        return Err(Error::Reducible(format!(
            "unit eigenvalue has multiplicity > 1 (second smallest singular value of K - I is {:.3e})",
            svd.singular_values[order[1]]
        )));
    }
    let v: DVector<f64> = v_t.row(order[0]).transpose();
    let s = v.sum();
    Ok(v / s)
}

/// `max |k(x'|x) f(x) - k(x|x') f(x')|`.
pub fn check_detailed_balance(kernel: &DMatrix<f64>, pmf: &DVector<f64>) -> f64 {
    let n = kernel.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((kernel[(i, j)] * pmf[i] - kernel[(j, i)] * pmf[j]).abs());
        }
    }
    worst
}
