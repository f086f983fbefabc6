//! Cost against mixing across wait policies, under the simulated latency
//! model.

use serde::Serialize;

use super::blocked::BlockedAugmentedModel;
use super::config::AddaConfig;
use super::engine::{adda_run, Driver};
use super::schedule::LatencyModel;
use crate::diagnostics::effective_sample_size;
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WallClockRow {
    pub fraction: f64,
    pub epsilon: f64,
    pub wait_count: usize,
    pub iterations: usize,
    /// Simulated seconds over the recorded iterations.
    pub seconds: f64,
    pub seconds_per_iteration: f64,
    /// Smallest effective sample size over the `x` columns.
    pub min_ess: f64,
    pub ess_per_second: f64,
}

/// Runs every `(r, epsilon)` configuration from the same seeds and tabulates
/// simulated cost and effective sample size.
#[allow(clippy::too_many_arguments)]
pub fn adda_wall_clock_report<M: BlockedAugmentedModel>(
    model: &M,
    configs: &[(f64, f64)],
    latency: &LatencyModel,
    init: (M::State, M::Latent),
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<Vec<WallClockRow>> {
    if configs.is_empty() {
        return Err(Error::param("at least one configuration is required"));
    }
    let k = model.block_count();
    let mut rows = Vec::with_capacity(configs.len());
    for &(fraction, epsilon) in configs {
        let config = AddaConfig::new(k, fraction, epsilon)?;
        let mut r = rng.clone();
        let run = adda_run(model, &config, init.clone(), n, burn_in, &mut r, Driver::Simulated(latency.clone()))?;
        let seconds: f64 = run.trace.iteration_seconds().iter().sum();
        let mut min_ess = f64::INFINITY;
        for (j, name) in run.trace.columns().iter().enumerate() {
            if name.starts_with("x.") {
                min_ess = min_ess.min(effective_sample_size(&run.trace.column(j))?);
            }
        }
        rows.push(WallClockRow {
            fraction,
            epsilon,
            wait_count: config.wait_count(),
            iterations: n,
            seconds,
            seconds_per_iteration: seconds / n as f64,
            min_ess,
            ess_per_second: min_ess / seconds,
        });
    }
    // Advance the caller's stream once so repeated reports differ.
    rand::RngCore::next_u64(rng);
    Ok(rows)
}
