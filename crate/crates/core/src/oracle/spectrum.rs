use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::joint::DiscreteJoint;
use super::matrix::check_detailed_balance;
use crate::linalg::orthonormal_complement;
use crate::{Error, Result};

/// Whether [`SpectrumReport::values`] holds eigenvalues (reversible
/// kernels) or singular values (everything else).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Eigenvalues,
    SingularValues,
}

#[derive(Clone, Debug, Serialize)]
pub struct SingularTriplet {
    pub beta: f64,
    /// Function on the `x` grid, unit norm in `L2(f_X)`, mean zero.
    pub g: Vec<f64>,
    /// Function on the `y` grid, unit norm in `L2(f_Y)`, mean zero.
    pub h: Vec<f64>,
}

/// Spectral summary of a kernel on the mean-zero subspace of `L2(pmf)`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub kind: SpectrumKind,
    /// Sorted descending; length is the grid size minus one.
    pub values: Vec<f64>,
    pub norm: f64,
    /// Multiplicity of the largest value (within `1e-9`).
    pub multiplicity: usize,
    /// All eigenvalues non-negative (within `1e-12`); false when only
    /// singular values are available.
    pub positive: bool,
    pub reversible: bool,
    pub triplets: Option<Vec<SingularTriplet>>,
}

pub const REVERSIBILITY_TOL: f64 = 1e-12;

/// Matrix of the kernel restricted to `L2_0(pmf)`, in an orthonormal basis
/// of the complement of `sqrt(pmf)` after the similarity `D^1/2 K D^-1/2`.
fn mean_zero_block(kernel: &DMatrix<f64>, pmf: &DVector<f64>) -> DMatrix<f64> {
    let n = pmf.len();
    let sq = pmf.map(f64::sqrt);
    let s = DMatrix::from_fn(n, n, |i, j| sq[i] * kernel[(i, j)] / sq[j]);
    let q = orthonormal_complement(&sq);
    q.transpose() * s * q
}

/// Eigenvalues of a `pmf`-self-adjoint operator on `L2_0(pmf)`, descending.
/// Works for signed (non-stochastic) operators too.
pub fn mean_zero_eigenvalues(kernel: &DMatrix<f64>, pmf: &DVector<f64>) -> Vec<f64> {
    if pmf.len() < 2 {
        return Vec::new();
    }
    let m = mean_zero_block(kernel, pmf);
    let sym = 0.5 * (&m + m.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn mean_zero_singular_values(kernel: &DMatrix<f64>, pmf: &DVector<f64>) -> Vec<f64> {
    if pmf.len() < 2 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = mean_zero_block(kernel, pmf).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectrum of `kernel` on `L2_0(pmf)`. Reversible kernels are symmetrized
/// and diagonalized; otherwise singular values are reported.
pub fn spectrum(kernel: &DMatrix<f64>, pmf: &DVector<f64>) -> SpectrumReport {
    let reversible = check_detailed_balance(kernel, pmf) <= REVERSIBILITY_TOL;
    let (kind, values) = if reversible {
        (SpectrumKind::Eigenvalues, mean_zero_eigenvalues(kernel, pmf))
    } else {
        (SpectrumKind::SingularValues, mean_zero_singular_values(kernel, pmf))
    };
    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let multiplicity = values.iter().filter(|v| (v.abs() - norm).abs() <= 1e-9).count();
    let positive = kind == SpectrumKind::Eigenvalues && values.iter().all(|&v| v >= -1e-12);
    SpectrumReport {
        kind,
        values,
        norm,
        multiplicity,
        positive,
        reversible,
        triplets: None,
    }
}

/// Spectrum of the joint's DA kernel together with its singular triplets.
pub fn spectrum_of_joint(joint: &DiscreteJoint) -> SpectrumReport {
    let k = joint.y_given_x() * joint.x_given_y();
    let mut report = spectrum(&k, joint.x_marginal());
    report.triplets = Some(svd_triplets(joint));
    report
}

/// Non-trivial singular triplets of `f(x,y) / (f_X(x) f_Y(y))`, descending
/// in `beta`.
pub fn svd_triplets(joint: &DiscreteJoint) -> Vec<SingularTriplet> {
    let (fx, fy) = (joint.x_marginal(), joint.y_marginal());
    let (sx, sy) = (joint.sx(), joint.sy());
    if sx < 2 || sy < 2 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(sx, sy, |x, y| joint.pmf()[(x, y)] / (fx[x] * fy[y]).sqrt());
    let qx = orthonormal_complement(&fx.map(f64::sqrt));
    let qy = orthonormal_complement(&fy.map(f64::sqrt));
    let n = qx.transpose() * m * &qy;
    let svd = n.svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    order
        .into_iter()
        .map(|i| {
            let gu = &qx * u.column(i);
            let hv = &qy * v_t.row(i).transpose();
            SingularTriplet {
                beta: svd.singular_values[i],
                g: (0..sx).map(|x| gu[x] / fx[x].sqrt()).collect(),
                h: (0..sy).map(|y| hv[y] / fy[y].sqrt()).collect(),
            }
        })
        .collect()
}

/// Largest residual of `P_Y g_i = beta_i h_i` and `P_X h_i = beta_i g_i`,
/// where `P_Y g(y) = E[g(X) | Y = y]` and `P_X h(x) = E[h(Y) | X = x]`.
pub fn singular_relation_residual(joint: &DiscreteJoint, triplets: &[SingularTriplet]) -> f64 {
    let a = joint.y_given_x();
    let b = joint.x_given_y();
    let mut worst = 0.0f64;
    for t in triplets {
        let g = DVector::from_column_slice(&t.g);
        let h = DVector::from_column_slice(&t.h);
        worst = worst.max((&b * &g - t.beta * &h).amax());
        worst = worst.max((&a * &h - t.beta * &g).amax());
    }
    worst
}

/// Weighted inner product `sum w_i a_i b_i`.
pub fn weighted_dot(w: &DVector<f64>, a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

pub(crate) fn require_same_len(a: usize, b: usize, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::param(format!("{what}: dimension {a} does not match {b}")))
    }
}
