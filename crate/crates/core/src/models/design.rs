use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Column means of `w`.
pub fn column_means(w: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(w.ncols(), w.column_iter().map(|c| c.mean()))
}

/// Fails unless every column of `w` sums to zero within `1e-10 * m`.
pub fn check_centered(w: &DMatrix<f64>) -> Result<()> {
    let tol = 1e-10 * w.nrows() as f64;
    for (j, c) in w.column_iter().enumerate() {
        let s = c.sum();
        if s.abs() > tol.max(1e-10) {
            return Err(Error::InvalidModel(format!("design column {j} is not centered (sum {s:e})")));
        }
    }
    Ok(())
}

/// Subtracts each column's mean.
pub fn center_columns(w: &DMatrix<f64>) -> DMatrix<f64> {
    let means = column_means(w);
    DMatrix::from_fn(w.nrows(), w.ncols(), |i, j| w[(i, j)] - means[j])
}

/// Centers each column and scales it to unit Euclidean norm. Constant
/// columns are rejected.
pub fn standardize_columns(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut c = center_columns(w);
    for (j, mut col) in c.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidModel(format!("design column {j} is constant")));
        }
        col /= norm;
    }
    Ok(c)
}

pub(crate) fn check_rows(name: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::InvalidModel(format!("{name} has {got} entries, expected {want}")))
    }
}

pub(crate) fn check_square(name: &str, a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::InvalidModel(format!("{name} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
    }
    let scale = a.amax().max(1.0);
    if (a - a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidModel(format!("{name} is not symmetric")));
    }
    Ok(())
}
