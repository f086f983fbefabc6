//! Dense helpers on top of nalgebra: a Cholesky factor with an explicit
//! pivot tolerance, Gaussian draws in covariance or precision form, and an
//! orthonormal complement used by the spectral code.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative pivot tolerance: a pivot below this times the largest diagonal
/// entry is treated as a failed factorization.
pub const SPD_PIVOT_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::NotSpd(format!("{}x{} matrix is not square", n, a.ncols())));
        }
        if n == 0 {
            return Ok(Self { l: DMatrix::zeros(0, 0) });
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotSpd("non-finite entry".into()));
        }
        let scale = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max);
        if scale <= 0.0 {
            return Err(Error::NotSpd("non-positive diagonal".into()));
        }
        let tol = SPD_PIVOT_TOL * scale;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d < tol {
                return Err(Error::NotSpd(format!("pivot {j} is {d:.3e} (tolerance {tol:.3e})")));
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = 0.5 * (a[(i, j)] + a[(j, i)]);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            out.set_column(j, &self.solve(&b.column(j).into_owned()));
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.l[(i, i)].ln()).sum::<f64>()
    }
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Draw from `N(P⁻¹ b, P⁻¹)` given the Cholesky factor of the precision `P`.
pub fn sample_canonical_gaussian<R: Rng + ?Sized>(
    precision: &Cholesky,
    b: &DVector<f64>,
    rng: &mut R,
) -> DVector<f64> {
    let mean = precision.solve(b);
    let z = standard_normal_vector(precision.dim(), rng);
    mean + precision.solve_upper(&z)
}

/// Orthonormal basis (as columns) of the orthogonal complement of the unit
/// vector `v`, built from a Householder reflection.
pub fn orthonormal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let n = v.len();
    let norm = v.norm();
    let u = v / norm;
    // H = I - 2 w wᵀ maps e_0 to ±u; columns 1.. of H span u⊥.
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let wn = w.norm();
    let h = if wn > 0.0 {
        let w = w / wn;
        DMatrix::identity(n, n) - 2.0 * &w * w.transpose()
    } else {
        DMatrix::identity(n, n)
    };
    h.columns(1, n - 1).into_owned()
}
