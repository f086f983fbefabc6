use nalgebra::DMatrix;
use serde::Serialize;

use super::matrix::TransitionMatrix;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Empirical transition frequencies of a live sampler against an exact
/// kernel.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyReport {
    pub steps_per_state: usize,
    /// Largest `|p_hat - p| / se` over all cells with `0 < p < 1`.
    pub max_standardized_deviation: f64,
    /// Cells where the kernel is 0 or 1 but the sampler disagreed.
    pub impossible_transitions: usize,
    #[serde(skip)]
    pub empirical: DMatrix<f64>,
}

impl FrequencyReport {
    pub fn within(&self, standard_errors: f64) -> bool {
        self.impossible_transitions == 0 && self.max_standardized_deviation <= standard_errors
    }
}

/// Runs `steps_per_state` independent transitions from every state with
/// `step` and compares the observed row frequencies to `kernel`.
pub fn transition_frequencies<F>(
    kernel: &TransitionMatrix,
    steps_per_state: usize,
    mut step: F,
    rng: &mut RngStream,
) -> Result<FrequencyReport>
where
    F: FnMut(usize, &mut RngStream) -> Result<usize>,
{
    if steps_per_state == 0 {
        return Err(Error::param("steps_per_state must be positive"));
    }
    let n = kernel.size();
    let mut counts = DMatrix::<f64>::zeros(n, n);
    for from in 0..n {
        for _ in 0..steps_per_state {
            let to = step(from, rng)?;
            if to >= n {
                return Err(Error::param(format!("sampler produced state {to} outside 0..{n}")));
            }
            counts[(from, to)] += 1.0;
        }
    }
    let empirical = counts / steps_per_state as f64;
    let k = kernel.matrix();
    let mut worst: f64 = 0.0;
    let mut impossible = 0;
    for i in 0..n {
        for j in 0..n {
            let p = k[(i, j)];
            let q = empirical[(i, j)];
            if p <= 1e-15 || p >= 1.0 - 1e-15 {
                if (q - p.round()).abs() > 0.0 {
                    impossible += 1;
                }
                continue;
            }
            let se = (p * (1.0 - p) / steps_per_state as f64).sqrt();
            worst = worst.max((q - p).abs() / se);
        }
    }
    Ok(FrequencyReport {
        steps_per_state,
        max_standardized_deviation: worst,
        impossible_transitions: impossible,
        empirical,
    })
}
