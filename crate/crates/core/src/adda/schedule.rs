//! Sources of worker timing: a deterministic script of completions per
//! epoch, or a stochastic latency model driven by its own random stream.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::sample_gamma;
use crate::rng::RngStream;
use crate::{Error, Result};

/// One epoch of scripted worker behaviour.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochScript {
    /// Workers whose blocks reach the manager, in arrival order. Arrivals
    /// past the manager's wait target land after it has moved on.
    pub arrivals: Vec<usize>,
    /// Workers that start their block and are cut off part-way.
    #[serde(default)]
    pub truncated: Vec<usize>,
}

impl EpochScript {
    pub fn new(arrivals: Vec<usize>, truncated: Vec<usize>) -> Self {
        Self { arrivals, truncated }
    }

    /// Every worker in index order.
    pub fn all_in_order(k: usize) -> Self {
        Self::new((0..k).collect(), Vec::new())
    }

    /// Each worker must appear at most once across both lists.
    pub fn validate(&self, k: usize) -> Result<()> {
        let mut seen = vec![false; k];
        for &j in self.arrivals.iter().chain(&self.truncated) {
            if j >= k {
                return Err(Error::param(format!("script names worker {j} but there are {k}")));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::param(format!("script lists worker {j} twice in one epoch")));
            }
        }
        Ok(())
    }
}

enum Source {
    Cyclic(Vec<EpochScript>),
    Generated(Box<dyn FnMut(u64) -> EpochScript + Send>),
}

/// Deterministic per-epoch scripts, so protocol runs are exactly
/// reproducible.
pub struct CompletionSchedule {
    source: Source,
}

impl fmt::Debug for CompletionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Source::Cyclic(s) => f.debug_tuple("CompletionSchedule::Cyclic").field(s).finish(),
            Source::Generated(_) => f.write_str("CompletionSchedule::Generated"),
        }
    }
}

impl CompletionSchedule {
    /// Epoch `t` uses `scripts[t % len]`.
    pub fn cyclic(scripts: Vec<EpochScript>) -> Result<Self> {
        if scripts.is_empty() {
            return Err(Error::param("a cyclic schedule needs at least one epoch script"));
        }
        Ok(Self { source: Source::Cyclic(scripts) })
    }

    /// Scripts produced on demand; `f` must be deterministic for runs to be
    /// reproducible.
    pub fn generated(f: impl FnMut(u64) -> EpochScript + Send + 'static) -> Self {
        Self { source: Source::Generated(Box::new(f)) }
    }

    /// Every worker arrives in index order every epoch.
    pub fn all_in_order(k: usize) -> Self {
        Self { source: Source::Cyclic(vec![EpochScript::all_in_order(k)]) }
    }

    pub fn script(&mut self, epoch: u64) -> EpochScript {
        match &mut self.source {
            Source::Cyclic(s) => s[(epoch % s.len() as u64) as usize].clone(),
            Source::Generated(f) => f(epoch),
        }
    }
}

/// Simulated cost model. Item durations of worker `j` are gamma with mean
/// `item_seconds[j]` and coefficient of variation `variation` (fixed when
/// `variation` is 0); every message takes `message_seconds`; the manager's
/// parameter draw takes `manager_seconds`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub item_seconds: Vec<f64>,
    pub variation: f64,
    pub message_seconds: f64,
    pub manager_seconds: f64,
}

impl LatencyModel {
    pub fn new(item_seconds: Vec<f64>, variation: f64, message_seconds: f64, manager_seconds: f64) -> Result<Self> {
        if item_seconds.is_empty() || item_seconds.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::param("item durations must be positive and finite"));
        }
        for (name, v) in [("variation", variation), ("message latency", message_seconds), ("manager cost", manager_seconds)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!("{name} must be nonnegative and finite, got {v}")));
            }
        }
        Ok(Self { item_seconds, variation, message_seconds, manager_seconds })
    }

    /// The same speed for all `k` workers.
    pub fn uniform(k: usize, item_seconds: f64, variation: f64, message_seconds: f64, manager_seconds: f64) -> Result<Self> {
        Self::new(vec![item_seconds; k], variation, message_seconds, manager_seconds)
    }

    pub fn workers(&self) -> usize {
        self.item_seconds.len()
    }

    pub fn item_duration(&self, worker: usize, rng: &mut RngStream) -> Result<f64> {
        let mean = self.item_seconds[worker];
        if self.variation == 0.0 {
            return Ok(mean);
        }
        let shape = 1.0 / (self.variation * self.variation);
        sample_gamma(shape, shape / mean, rng)
    }
}
