use serde::Serialize;

use crate::{Error, Result};

/// Wait policy of the manager: with probability `epsilon` wait for all
/// `blocks` updates, otherwise for `ceil(blocks * fraction)` of them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AddaConfig {
    blocks: usize,
    fraction: f64,
    epsilon: f64,
}

impl AddaConfig {
    pub fn new(blocks: usize, fraction: f64, epsilon: f64) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::param("ADDA needs at least one block"));
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::param(format!("wait fraction must lie in (0, 1], got {fraction}")));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::param(format!("full-wait probability must lie in (0, 1], got {epsilon}")));
        }
        Ok(Self { blocks, fraction, epsilon })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ceil(k r)`, computed with a small slack so that products such as
    /// `3 * (1/3)` do not round up past their exact value.
    pub fn wait_count(&self) -> usize {
        let raw = (self.blocks as f64 * self.fraction - 1e-9).ceil() as usize;
        raw.clamp(1, self.blocks)
    }

    /// Whether the full-wait coin can change the wait target.
    pub fn coin_needed(&self) -> bool {
        self.epsilon < 1.0 && self.wait_count() < self.blocks
    }
}
