//! Discrete-event driver. Workers spend random simulated time per latent
//! item, messages take a fixed latency and the manager's parameter draw has
//! a fixed cost. Preemption lands on the first item boundary at or after a
//! newer broadcast arrives.
//!
//! All timing comes from the dedicated timing stream, never from the block
//! draws, so which workers make each epoch's cut is independent of the
//! values they drew.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::blocked::BlockedAugmentedModel;
use super::config::AddaConfig;
use super::engine::{send_all, stall, AddaStats, Msg, Recorder, Streams};
use super::protocol::{Manager, Receipt, Worker, WorkerEvent};
use super::schedule::LatencyModel;
use super::transport::Transport;
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    /// One message is due in worker `j`'s inbox.
    WorkerInbox(usize),
    /// One message is due in the manager's inbox.
    ManagerInbox,
    WorkerDone { worker: usize, draw: u64 },
    Restart { worker: usize, draw: u64 },
    ManagerClose,
}

struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest event, ties by insertion.
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Scheduled>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, time: f64, event: Event) {
        self.seq += 1;
        self.heap.push(Scheduled { time, seq: self.seq, event });
    }
}

struct ActiveDraw<X> {
    id: u64,
    epoch: u64,
    x: X,
    boundaries: Vec<f64>,
    /// Items completed before the scheduled preemption.
    cut: Option<usize>,
}

struct SimWorker<X> {
    worker: Worker<X>,
    active: Option<ActiveDraw<X>>,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_simulated<M: BlockedAugmentedModel, Tr: Transport>(
    model: &M,
    config: &AddaConfig,
    x0: M::State,
    blocks0: Vec<M::Block>,
    streams: &mut Streams,
    latency: &LatencyModel,
    transport: &Tr,
    total: usize,
    rec: &mut Recorder,
) -> Result<AddaStats> {
    let k = config.blocks();
    if latency.workers() != k {
        return Err(Error::param(format!("latency model covers {} workers, run has {k}", latency.workers())));
    }
    let mut manager = Manager::new(*config, x0, blocks0)?;
    let mut ch = transport.connect::<Msg<M>>(k);
    let mut workers: Vec<SimWorker<M::State>> =
        (0..k).map(|j| SimWorker { worker: Worker::new(j), active: None }).collect();
    let mut queue = Queue::default();
    let mut stats = AddaStats::default();
    let mut next_draw = 0u64;
    let mut closing = false;
    let mut last_close = 0.0;
    let mut now = 0.0;
    let budget = 64 + 8 * (k as u64 + 1) * total as u64;
    let mut processed = 0u64;

    let mut start_draw = |w: &mut SimWorker<M::State>, j: usize, now: f64, queue: &mut Queue, timing: &mut RngStream| -> Result<()> {
        let (epoch, x) = match w.worker.current() {
            Some((e, x)) => (e, x.clone()),
            None => return Ok(()),
        };
        let mut t = now;
        let mut boundaries = Vec::with_capacity(model.block_len(j));
        for _ in 0..model.block_len(j).max(1) {
            t += latency.item_duration(j, timing)?;
            boundaries.push(t);
        }
        next_draw += 1;
        queue.push(t, Event::WorkerDone { worker: j, draw: next_draw });
        w.active = Some(ActiveDraw { id: next_draw, epoch, x, boundaries, cut: None });
        Ok(())
    };

    if manager.open_epoch(&mut streams.manager) == k {
        stats.full_waits += 1;
    }
    send_all(&mut ch.to_workers, &manager.broadcast())?;
    for j in 0..k {
        queue.push(latency.message_seconds, Event::WorkerInbox(j));
    }

    while (stats.epochs as usize) < total {
        let Some(Scheduled { time, event, .. }) = queue.heap.pop() else {
            return Err(stall(manager.epoch(), manager.dump()));
        };
        processed += 1;
        if processed > budget {
            return Err(Error::Protocol(format!(
                "no progress within {budget} events; manager state: {}",
                manager.dump()
            )));
        }
        now = time;
        match event {
            Event::WorkerInbox(j) => {
                // An empty inbox here means the transport lost the message.
                let Some(msg) = ch.worker_inboxes[j].try_recv()? else { continue };
                let w = &mut workers[j];
                if w.worker.on_message(msg)? == WorkerEvent::Shutdown {
                    continue;
                }
                match &mut w.active {
                    None => start_draw(w, j, now, &mut queue, &mut streams.timing)?,
                    Some(d) if d.cut.is_none() => {
                        let i = d.boundaries.partition_point(|&b| b < now);
                        // Past the last boundary the draw finishes and is sent stale.
                        if i + 1 < d.boundaries.len() {
                            d.cut = Some(i + 1);
                            queue.push(d.boundaries[i], Event::Restart { worker: j, draw: d.id });
                        }
                    }
                    Some(_) => {}
                }
            }
            Event::WorkerDone { worker: j, draw } => {
                let w = &mut workers[j];
                let Some(d) = w.active.take_if(|d| d.id == draw && d.cut.is_none()) else { continue };
                let update = w
                    .worker
                    .draw(model, d.epoch, &d.x, &mut streams.workers[j], &mut || false)?
                    .ok_or_else(|| Error::Protocol(format!("worker {j} returned no block without being preempted")))?;
                ch.to_manager[j].send(update)?;
                queue.push(now + latency.message_seconds, Event::ManagerInbox);
                if w.worker.current().is_some_and(|(e, _)| e > d.epoch) {
                    start_draw(w, j, now, &mut queue, &mut streams.timing)?;
                }
            }
            Event::Restart { worker: j, draw } => {
                let w = &mut workers[j];
                let Some(d) = w.active.take_if(|d| d.id == draw) else { continue };
                let cut = d.cut.unwrap_or(0);
                let mut done = 0;
                let mut preempted = || {
                    let stop = done >= cut;
                    done += 1;
                    stop
                };
                if w.worker.draw(model, d.epoch, &d.x, &mut streams.workers[j], &mut preempted)?.is_some() {
                    return Err(Error::Protocol(format!("worker {j} ignored preemption")));
                }
                stats.preempted_draws += 1;
                start_draw(w, j, now, &mut queue, &mut streams.timing)?;
            }
            Event::ManagerInbox => {
                let Some(msg) = ch.manager_inbox.try_recv()? else { continue };
                match manager.receive(msg)? {
                    Receipt::Accepted { complete } => {
                        stats.accepted_updates += 1;
                        if complete && !closing {
                            closing = true;
                            queue.push(now + latency.manager_seconds, Event::ManagerClose);
                        }
                    }
                    Receipt::Stale => stats.stale_updates += 1,
                }
            }
            Event::ManagerClose => {
                closing = false;
                let b = manager.close_epoch(model, &mut streams.manager)?;
                stats.epochs += 1;
                rec.record(manager.x(), manager.blocks(), now - last_close);
                last_close = now;
                if (stats.epochs as usize) < total {
                    if manager.open_epoch(&mut streams.manager) == k {
                        stats.full_waits += 1;
                    }
                    send_all(&mut ch.to_workers, &b)?;
                    for j in 0..k {
                        queue.push(now + latency.message_seconds, Event::WorkerInbox(j));
                    }
                }
            }
        }
    }
    stats.simulated_seconds = Some(now);
    Ok(stats)
}
