//! Exact transition matrices of the asynchronous chain on small discrete
//! instances with two latent blocks.

use nalgebra::DMatrix;

use crate::oracle::{DiscreteBlockedJoint, TransitionMatrix};
use crate::{Error, Result};

/// Kernel over `(x, y)` pairs, indexed `x * latent_count + latent_index(y)`.
///
/// With probability `epsilon` both blocks are refreshed; otherwise only block
/// `j` is, with probability `selection[x][j]` given the current `x`. A new
/// `x'` is then drawn from the spliced latent.
pub fn adda_exact_kernel_discrete(
    joint: &DiscreteBlockedJoint,
    selection: &[[f64; 2]],
    epsilon: f64,
) -> Result<TransitionMatrix> {
    if joint.block_sizes().len() != 2 {
        return Err(Error::param(format!(
            "the exact kernel covers two latent blocks, got {}",
            joint.block_sizes().len()
        )));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::param(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if selection.len() != joint.sx() {
        return Err(Error::param(format!(
            "selection probabilities given for {} states, joint has {}",
            selection.len(),
            joint.sx()
        )));
    }
    for (x, c) in selection.iter().enumerate() {
        if c.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (c[0] + c[1] - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("selection probabilities {c:?} at state {x} are not on the simplex")));
        }
    }
    Ok(build(joint, |x, y, y_new| {
        let (f1, f2) = (joint.block(0)[(x, y_new[0])], joint.block(1)[(x, y_new[1])]);
        let keep1 = if y_new[0] == y[0] { 1.0 } else { 0.0 };
        let keep2 = if y_new[1] == y[1] { 1.0 } else { 0.0 };
        let c = selection[x];
        epsilon * f1 * f2 + (1.0 - epsilon) * (c[0] * f1 * keep2 + c[1] * f2 * keep1)
    }))
}

/// Plain DA on the joint chain: `y' ~ f(y | x)`, then `x' ~ f(x | y')`.
pub fn joint_da_kernel(joint: &DiscreteBlockedJoint) -> TransitionMatrix {
    build(joint, |x, _, y_new| {
        y_new.iter().enumerate().map(|(j, &v)| joint.block(j)[(x, v)]).product()
    })
}

fn build(joint: &DiscreteBlockedJoint, latent_move: impl Fn(usize, &[usize], &[usize]) -> f64) -> TransitionMatrix {
    let ny = joint.latent_count();
    let n = joint.sx() * ny;
    let latents: Vec<Vec<usize>> = (0..ny).map(|i| joint.latent_from_index(i)).collect();
    let x_given: Vec<Vec<f64>> = latents.iter().map(|y| joint.state_given_latent(y)).collect();
    let mut k = DMatrix::zeros(n, n);
    for x in 0..joint.sx() {
        for (iy, y) in latents.iter().enumerate() {
            for (iy_new, y_new) in latents.iter().enumerate() {
                let m = latent_move(x, y, y_new);
                if m == 0.0 {
                    continue;
                }
                for x_new in 0..joint.sx() {
                    k[(x * ny + iy, x_new * ny + iy_new)] = m * x_given[iy_new][x_new];
                }
            }
        }
    }
    TransitionMatrix::new(k).expect("rows of a product of conditionals sum to one")
}

/// Number of eigenvalues within `tol` of 1; more than one means the chain
/// is reducible.
pub fn unit_eigenvalue_count(kernel: &TransitionMatrix, tol: f64) -> usize {
    kernel
        .matrix()
        .complex_eigenvalues()
        .iter()
        .filter(|l| (l.re - 1.0).hypot(l.im) < tol)
        .count()
}
