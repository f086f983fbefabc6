use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::linalg::{standard_normal_vector, Cholesky};
use crate::{Error, Result};

/// How the matrix passed to [`sample_multivariate_normal`] is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parameterization {
    Covariance,
    Precision,
}

/// Gaussian draw with one Cholesky factorization of the supplied matrix.
pub fn sample_multivariate_normal<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    matrix: &DMatrix<f64>,
    parameterization: Parameterization,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if matrix.nrows() != mean.len() {
        return Err(Error::param(format!(
            "mean has length {} but matrix is {}x{}",
            mean.len(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    let chol = Cholesky::new(matrix)?;
    let z = standard_normal_vector(mean.len(), rng);
    Ok(match parameterization {
        Parameterization::Covariance => mean + chol.factor() * z,
        Parameterization::Precision => mean + chol.solve_upper(&z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn not_spd_is_reported() {
        let mut rng = RngStream::new(0, 0);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = sample_multivariate_normal(&DVector::zeros(2), &m, Parameterization::Covariance, &mut rng);
        assert!(matches!(r, Err(Error::NotSpd(_))));
    }

    #[test]
    fn precision_and_covariance_agree_in_distribution() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        let prec = cov.clone().try_inverse().unwrap();
        let mean = DVector::from_vec(vec![1.0, -1.0]);
        let mut rng = RngStream::new(4, 0);
        let n = 200_000;
        let mut s = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let x = sample_multivariate_normal(&mean, &prec, Parameterization::Precision, &mut rng).unwrap() - &mean;
            s += &x * x.transpose();
        }
        s /= n as f64;
        assert!((s - cov).amax() < 0.03);
    }
}
