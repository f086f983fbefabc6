//! The joint `(x, y)` chain: shared setup, the scripted driver and the
//! plain blocked DA reference chain.
//!
//! Random streams are laid out the same way by every driver and by
//! [`blocked_da_run`]: one root stream is derived from the caller's stream,
//! the manager uses child 0, worker `j` uses child `1 + j` and simulated
//! timing uses child `1 + k`. Because each worker draws only from its own
//! stream, the order in which workers run never changes the draws.

use std::time::{Duration, Instant};

use rand::RngCore;
use serde::Serialize;

use super::blocked::{BlockIndependence, BlockedAugmentedModel, FACTORIZATION_TOL};
use super::config::AddaConfig;
use super::protocol::{Manager, ProtocolMessage, Receipt, Worker};
use super::schedule::{CompletionSchedule, LatencyModel};
use super::simulated::run_simulated;
use super::threaded::run_threaded;
use super::transport::{Channels, InProcess, Outbox, Transport};
use crate::kernel::{AugmentedModel, ChainMeta, ChainTrace, TraceRow};
use crate::rng::RngStream;
use crate::{Error, Result};

pub(crate) type Msg<M> = ProtocolMessage<<M as AugmentedModel>::State, <M as BlockedAugmentedModel>::Block>;

/// Options for the multi-threaded driver.
#[derive(Clone, Debug)]
pub struct ThreadedOptions {
    /// The manager reports a stall when no update arrives for this long.
    pub stall_timeout: Duration,
    /// Artificial work added before every latent item, to make preemption
    /// observable on fast models.
    pub item_delay: Option<Duration>,
}

impl Default for ThreadedOptions {
    fn default() -> Self {
        Self { stall_timeout: Duration::from_secs(30), item_delay: None }
    }
}

/// Who decides when workers finish.
#[derive(Debug)]
pub enum Driver {
    /// Completions follow a fixed script; runs are exactly reproducible.
    Scripted(CompletionSchedule),
    /// Discrete-event simulation with random item durations from a
    /// dedicated stream; reproducible, and reports simulated time.
    Simulated(LatencyModel),
    /// One OS thread per worker; completion order is up to the scheduler.
    Threaded(ThreadedOptions),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AddaStats {
    pub epochs: u64,
    /// Epochs whose coin (or policy) required every block.
    pub full_waits: u64,
    pub accepted_updates: u64,
    pub stale_updates: u64,
    pub preempted_draws: u64,
    /// Total simulated time, for the simulated driver only.
    pub simulated_seconds: Option<f64>,
}

#[derive(Debug)]
pub struct AddaRun {
    /// Columns `x.*` then `y{j}.*` for every block.
    pub trace: ChainTrace,
    pub stats: AddaStats,
    pub independence: BlockIndependence,
}

pub(crate) struct Streams {
    pub manager: RngStream,
    pub workers: Vec<RngStream>,
    pub timing: RngStream,
}

impl Streams {
    pub fn derive(rng: &mut RngStream, k: usize) -> (RngStream, Self) {
        let root = RngStream::new(rng.next_u64(), 0);
        let streams = Self {
            manager: root.split(0),
            workers: (0..k).map(|j| root.split(1 + j as u64)).collect(),
            timing: root.split(1 + k as u64),
        };
        (root, streams)
    }
}

/// Rejects models whose block count disagrees with the configuration or
/// whose exact factorization check failed.
pub(crate) fn check_model<M: BlockedAugmentedModel>(model: &M, config: &AddaConfig) -> Result<BlockIndependence> {
    if model.block_count() != config.blocks() {
        return Err(Error::param(format!(
            "model has {} latent blocks, configuration expects {}",
            model.block_count(),
            config.blocks()
        )));
    }
    let independence = model.independence();
    if let BlockIndependence::Verified { max_deviation } = independence {
        if !(max_deviation <= FACTORIZATION_TOL) {
            return Err(Error::InvalidModel(format!(
                "latent blocks are not conditionally independent (deviation {max_deviation:e})"
            )));
        }
    }
    Ok(independence)
}

fn split_init<M: BlockedAugmentedModel>(model: &M, y: &M::Latent) -> Result<Vec<M::Block>> {
    let blocks = model.split_latent(y);
    if blocks.len() != model.block_count() {
        return Err(Error::param(format!(
            "initial latent splits into {} blocks, model has {}",
            blocks.len(),
            model.block_count()
        )));
    }
    Ok(blocks)
}

/// Keeps the post-burn-in `(x, y)` rows.
pub(crate) struct Recorder {
    trace: ChainTrace,
    burn_in: usize,
    closed: usize,
}

impl Recorder {
    fn new<X: TraceRow, B: TraceRow>(meta: ChainMeta, x: &X, blocks: &[B], burn_in: usize) -> Self {
        let mut columns: Vec<String> = x.column_names().into_iter().map(|c| format!("x.{c}")).collect();
        for (j, b) in blocks.iter().enumerate() {
            columns.extend(b.column_names().into_iter().map(|c| format!("y{j}.{c}")));
        }
        Self { trace: ChainTrace::new(meta, columns), burn_in, closed: 0 }
    }

    pub fn record<X: TraceRow, B: TraceRow>(&mut self, x: &X, blocks: &[B], seconds: f64) {
        if self.closed >= self.burn_in {
            let mut row = x.row();
            for b in blocks {
                row.extend(b.row());
            }
            self.trace.push(&row, seconds);
        }
        self.closed += 1;
    }

    fn abort(self, source: Error) -> Error {
        Error::ChainAborted { iteration: self.closed, partial: Box::new(self.trace), source: Box::new(source) }
    }
}

fn meta<M>(kernel: String, root: &RngStream, n: usize, burn_in: usize) -> ChainMeta {
    let model = std::any::type_name::<M>();
    let model = model.rsplit("::").next().unwrap_or(model).trim_end_matches('>');
    ChainMeta {
        kernel,
        model: model.to_string(),
        seed: root.seed(),
        stream_id: root.stream_id(),
        burn_in,
        iterations: n,
    }
}

pub(crate) fn send_all<T: Clone>(outboxes: &mut [Box<dyn Outbox<T>>], msg: &T) -> Result<()> {
    outboxes.iter_mut().try_for_each(|o| o.send(msg.clone()))
}

pub(crate) fn stall(epoch: u64, dump: String) -> Error {
    Error::Protocol(format!("stalled in epoch {epoch} before the wait target was reached; manager state: {dump}"))
}

/// Runs `burn_in + n` epochs of the asynchronous chain from `init`.
pub fn adda_run<M: BlockedAugmentedModel>(
    model: &M,
    config: &AddaConfig,
    init: (M::State, M::Latent),
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
    driver: Driver,
) -> Result<AddaRun> {
    adda_run_with_transport(model, config, init, n, burn_in, rng, driver, &InProcess)
}

/// [`adda_run`] over a caller-chosen transport.
#[allow(clippy::too_many_arguments)]
pub fn adda_run_with_transport<M: BlockedAugmentedModel, Tr: Transport>(
    model: &M,
    config: &AddaConfig,
    init: (M::State, M::Latent),
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
    driver: Driver,
    transport: &Tr,
) -> Result<AddaRun> {
    if n == 0 {
        return Err(Error::param("iteration count must be positive"));
    }
    let independence = check_model(model, config)?;
    let k = config.blocks();
    let (x0, y0) = init;
    let blocks0 = split_init(model, &y0)?;
    let (root, mut streams) = Streams::derive(rng, k);
    let label = format!("adda(k={k}, r={}, eps={})", config.fraction(), config.epsilon());
    let mut rec = Recorder::new(meta::<M>(label, &root, n, burn_in), &x0, &blocks0, burn_in);
    let total = burn_in + n;
    let outcome = match driver {
        Driver::Scripted(schedule) => {
            ScriptedSession::from_parts(model, config, x0, blocks0, streams, schedule, transport)
                .and_then(|mut s| s.run(total, &mut rec).map(|()| s.stats))
        }
        Driver::Simulated(latency) => {
            run_simulated(model, config, x0, blocks0, &mut streams, &latency, transport, total, &mut rec)
        }
        Driver::Threaded(options) => {
            run_threaded(model, config, x0, blocks0, streams, &options, transport, total, &mut rec)
        }
    };
    match outcome {
        Ok(stats) => Ok(AddaRun { trace: rec.trace, stats, independence }),
        Err(e) => Err(rec.abort(e)),
    }
}

/// The scripted driver as a stepping session. Besides whole runs it allows
/// restarting from an arbitrary `(x, y)`, which is what single-transition
/// frequency checks need.
pub struct ScriptedSession<'m, M: BlockedAugmentedModel> {
    model: &'m M,
    manager: Manager<M::State, M::Block>,
    workers: Vec<Worker<M::State>>,
    streams: Streams,
    channels: Channels<Msg<M>>,
    schedule: CompletionSchedule,
    stats: AddaStats,
}

impl<'m, M: BlockedAugmentedModel> ScriptedSession<'m, M> {
    pub fn new<Tr: Transport>(
        model: &'m M,
        config: &AddaConfig,
        init: (M::State, M::Latent),
        rng: &mut RngStream,
        schedule: CompletionSchedule,
        transport: &Tr,
    ) -> Result<Self> {
        check_model(model, config)?;
        let blocks = split_init(model, &init.1)?;
        let (_, streams) = Streams::derive(rng, config.blocks());
        Self::from_parts(model, config, init.0, blocks, streams, schedule, transport)
    }

    fn from_parts<Tr: Transport>(
        model: &'m M,
        config: &AddaConfig,
        x: M::State,
        blocks: Vec<M::Block>,
        streams: Streams,
        schedule: CompletionSchedule,
        transport: &Tr,
    ) -> Result<Self> {
        let k = config.blocks();
        let manager = Manager::new(*config, x, blocks)?;
        let mut channels = transport.connect(k);
        send_all(&mut channels.to_workers, &manager.broadcast())?;
        Ok(Self {
            model,
            manager,
            workers: (0..k).map(Worker::new).collect(),
            streams,
            channels,
            schedule,
            stats: AddaStats::default(),
        })
    }

    pub fn x(&self) -> &M::State {
        self.manager.x()
    }

    pub fn latent(&self) -> M::Latent {
        self.model.join_latent(self.manager.blocks())
    }

    pub fn stats(&self) -> &AddaStats {
        &self.stats
    }

    /// Replaces `(x, y)`; the next epoch starts from it.
    pub fn restart(&mut self, x: M::State, y: &M::Latent) -> Result<()> {
        let blocks = split_init(self.model, y)?;
        let b = self.manager.restart(x, blocks)?;
        send_all(&mut self.channels.to_workers, &b)
    }

    fn run(&mut self, total: usize, rec: &mut Recorder) -> Result<()> {
        for _ in 0..total {
            let start = Instant::now();
            self.epoch()?;
            rec.record(self.manager.x(), self.manager.blocks(), start.elapsed().as_secs_f64());
        }
        Ok(())
    }

    /// One manager epoch: toss the coin, let the scripted workers draw and
    /// send, splice the first arrivals up to the wait target, draw `x`.
    pub fn epoch(&mut self) -> Result<()> {
        let k = self.workers.len();
        let epoch = self.manager.epoch();
        if self.manager.open_epoch(&mut self.streams.manager) == k {
            self.stats.full_waits += 1;
        }
        let script = self.schedule.script(epoch);
        script.validate(k)?;
        for (worker, inbox) in self.workers.iter_mut().zip(&mut self.channels.worker_inboxes) {
            while let Some(msg) = inbox.try_recv()? {
                worker.on_message(msg)?;
            }
        }
        for &j in &script.arrivals {
            let (e, x) = current(&self.workers[j])?;
            let update = self.workers[j]
                .draw(self.model, e, &x, &mut self.streams.workers[j], &mut || false)?
                .ok_or_else(|| Error::Protocol(format!("worker {j} returned no block without being preempted")))?;
            self.channels.to_manager[j].send(update)?;
        }
        for &j in &script.truncated {
            let (e, x) = current(&self.workers[j])?;
            let cut = self.model.block_len(j) / 2;
            let mut done = 0;
            let mut preempted = || {
                let stop = done >= cut;
                done += 1;
                stop
            };
            if self.workers[j].draw(self.model, e, &x, &mut self.streams.workers[j], &mut preempted)?.is_some() {
                return Err(Error::Protocol(format!("worker {j} ignored preemption")));
            }
            self.stats.preempted_draws += 1;
        }
        loop {
            let Some(msg) = self.channels.manager_inbox.try_recv()? else {
                return Err(stall(epoch, self.manager.dump()));
            };
            match self.manager.receive(msg)? {
                Receipt::Accepted { complete } => {
                    self.stats.accepted_updates += 1;
                    if complete {
                        break;
                    }
                }
                Receipt::Stale => self.stats.stale_updates += 1,
            }
        }
        let b = self.manager.close_epoch(self.model, &mut self.streams.manager)?;
        send_all(&mut self.channels.to_workers, &b)?;
        self.stats.epochs += 1;
        Ok(())
    }
}

fn current<X: Clone>(w: &Worker<X>) -> Result<(u64, X)> {
    w.current()
        .map(|(e, x)| (e, x.clone()))
        .ok_or_else(|| Error::Protocol(format!("worker {} has not received a parameter", w.block())))
}

/// Synchronous blocked DA with the same stream layout as the asynchronous
/// drivers: every epoch draws all blocks, then `x`. With `epsilon = 1` or
/// `r = 1` the asynchronous chain reproduces this trace exactly.
pub fn blocked_da_run<M: BlockedAugmentedModel>(
    model: &M,
    init: (M::State, M::Latent),
    n: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<ChainTrace> {
    if n == 0 {
        return Err(Error::param("iteration count must be positive"));
    }
    let k = model.block_count();
    let (mut x, y0) = init;
    let mut blocks = split_init(model, &y0)?;
    let (root, mut streams) = Streams::derive(rng, k);
    let mut rec = Recorder::new(meta::<M>("blocked-da".into(), &root, n, burn_in), &x, &blocks, burn_in);
    for _ in 0..burn_in + n {
        let start = Instant::now();
        let step = (|| -> Result<()> {
            for (j, (b, r)) in blocks.iter_mut().zip(&mut streams.workers).enumerate() {
                *b = model
                    .draw_block(j, &x, r, &mut || false)?
                    .ok_or_else(|| Error::Protocol(format!("block {j} returned nothing without being preempted")))?;
            }
            x = model.draw_state(&model.join_latent(&blocks), &mut streams.manager)?;
            Ok(())
        })();
        if let Err(e) = step {
            return Err(rec.abort(e));
        }
        rec.record(&x, &blocks, start.elapsed().as_secs_f64());
    }
    Ok(rec.trace)
}
