use std::time::Instant;

use nalgebra::DVector;
use serde::Serialize;

use crate::rng::RngStream;
use crate::{Error, Result};

/// Flattening of a chain state into one trace row.
pub trait TraceRow {
    fn row(&self) -> Vec<f64>;

    fn column_names(&self) -> Vec<String> {
        (0..self.row().len()).map(|i| format!("x{i}")).collect()
    }
}

impl TraceRow for f64 {
    fn row(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl TraceRow for usize {
    fn row(&self) -> Vec<f64> {
        vec![*self as f64]
    }
}

impl TraceRow for Vec<f64> {
    fn row(&self) -> Vec<f64> {
        self.clone()
    }
}

impl TraceRow for DVector<f64> {
    fn row(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }
}

impl<A: TraceRow, B: TraceRow> TraceRow for (A, B) {
    fn row(&self) -> Vec<f64> {
        let mut r = self.0.row();
        r.extend(self.1.row());
        r
    }

    fn column_names(&self) -> Vec<String> {
        let mut n: Vec<String> = self.0.column_names().into_iter().map(|c| format!("u.{c}")).collect();
        n.extend(self.1.column_names().into_iter().map(|c| format!("v.{c}")));
        n
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ChainMeta {
    pub kernel: String,
    pub model: String,
    pub seed: u64,
    pub stream_id: u64,
    pub burn_in: usize,
    pub iterations: usize,
}

impl ChainMeta {
    pub fn new(kernel: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            kernel: kernel.into(),
            model: model.into(),
            ..Self::default()
        }
    }
}

/// Post-burn-in draws, one row per iteration, with run metadata and the
/// wall-clock time of every recorded iteration.
#[derive(Clone, Debug)]
pub struct ChainTrace {
    pub meta: ChainMeta,
    columns: Vec<String>,
    data: Vec<f64>,
    seconds: Vec<f64>,
}

impl ChainTrace {
    pub fn new(meta: ChainMeta, columns: Vec<String>) -> Self {
        Self {
            meta,
            columns,
            data: Vec::new(),
            seconds: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64], seconds: f64) {
        assert_eq!(row.len(), self.columns.len(), "trace row width mismatch");
        self.data.extend_from_slice(row);
        self.seconds.push(seconds);
    }

    pub fn len(&self) -> usize {
        self.seconds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seconds.is_empty()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.ncols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn iteration_seconds(&self) -> &[f64] {
        &self.seconds
    }

    /// Applies `f` to every row, giving one derived series.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.rows().map(f).collect()
    }
}

/// Runs `burn_in + n` transitions from `init`, keeping the last `n`.
pub fn run_chain<S, K>(
    meta: ChainMeta,
    mut kernel: K,
    init: S,
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<ChainTrace>
where
    S: TraceRow,
    K: FnMut(&S, &mut RngStream) -> Result<S>,
{
    if n == 0 {
        return Err(Error::param("iteration count must be positive"));
    }
    let meta = ChainMeta {
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        burn_in,
        iterations: n,
        ..meta
    };
    let mut trace = ChainTrace::new(meta, init.column_names());
    let mut x = init;
    for it in 0..(burn_in + n) {
        let start = Instant::now();
        match kernel(&x, rng) {
            Ok(next) => x = next,
            Err(e) => {
                return Err(Error::ChainAborted {
                    iteration: it,
                    partial: Box::new(trace),
                    source: Box::new(e),
                })
            }
        }
        if it >= burn_in {
            trace.push(&x.row(), start.elapsed().as_secs_f64());
        }
    }
    Ok(trace)
}
