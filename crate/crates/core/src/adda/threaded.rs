//! One OS thread per worker, the manager on the calling thread.
//!
//! Completion order here depends on how long each block draw takes, which
//! for rejection samplers depends on the values drawn. Use the simulated or
//! scripted driver when selection must be independent of the draws.

use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use super::blocked::BlockedAugmentedModel;
use super::config::AddaConfig;
use super::engine::{send_all, stall, AddaStats, Msg, Recorder, Streams, ThreadedOptions};
use super::protocol::{Manager, ProtocolMessage, Receipt, Worker, WorkerEvent};
use super::transport::{Inbox, Outbox, Transport};
use crate::rng::RngStream;
use crate::{Error, Result};

const POLL: Duration = Duration::from_millis(5);

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_threaded<M: BlockedAugmentedModel, Tr: Transport>(
    model: &M,
    config: &AddaConfig,
    x0: M::State,
    blocks0: Vec<M::Block>,
    streams: Streams,
    options: &ThreadedOptions,
    transport: &Tr,
    total: usize,
    rec: &mut Recorder,
) -> Result<AddaStats> {
    let k = config.blocks();
    let mut manager = Manager::new(*config, x0, blocks0)?;
    let ch = transport.connect::<Msg<M>>(k);
    let (mut to_workers, mut inbox) = (ch.to_workers, ch.manager_inbox);
    let Streams { manager: mut manager_rng, workers: worker_rngs, .. } = streams;
    let stop = AtomicBool::new(false);
    let failed = AtomicBool::new(false);
    let mut stats = AddaStats::default();

    let (manager_result, worker_results) = thread::scope(|s| {
        let handles: Vec<_> = ch
            .worker_inboxes
            .into_iter()
            .zip(ch.to_manager)
            .zip(worker_rngs)
            .enumerate()
            .map(|(j, ((inbox, outbox), rng))| {
                let (stop, failed) = (&stop, &failed);
                s.spawn(move || {
                    let r = worker_loop(model, j, inbox, outbox, rng, options.item_delay, stop);
                    if r.is_err() {
                        failed.store(true, Ordering::SeqCst);
                    }
                    r
                })
            })
            .collect();

        let result = (|| -> Result<()> {
            send_all(&mut to_workers, &manager.broadcast())?;
            for it in 0..total {
                let start = Instant::now();
                if manager.open_epoch(&mut manager_rng) == k {
                    stats.full_waits += 1;
                }
                loop {
                    let msg = recv_or_stall(&mut inbox, options.stall_timeout, &failed, &manager)?;
                    match manager.receive(msg)? {
                        Receipt::Accepted { complete } => {
                            stats.accepted_updates += 1;
                            if complete {
                                break;
                            }
                        }
                        Receipt::Stale => stats.stale_updates += 1,
                    }
                }
                let b = manager.close_epoch(model, &mut manager_rng)?;
                stats.epochs += 1;
                rec.record(manager.x(), manager.blocks(), start.elapsed().as_secs_f64());
                if it + 1 < total {
                    send_all(&mut to_workers, &b)?;
                }
            }
            Ok(())
        })();

        // Poison pill on every path; the flag covers a pill lost in transit.
        for o in to_workers.iter_mut() {
            let _ = o.send(ProtocolMessage::Shutdown);
        }
        stop.store(true, Ordering::SeqCst);
        let workers: Vec<Result<u64>> = handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Protocol("worker thread panicked".into()))))
            .collect();
        (result, workers)
    });

    // A worker's own error explains a manager stall better than the stall.
    for r in worker_results {
        stats.preempted_draws += r?;
    }
    manager_result?;
    Ok(stats)
}

fn recv_or_stall<X: Clone + std::fmt::Debug, B: Clone, T>(
    inbox: &mut Box<dyn Inbox<T>>,
    timeout: Duration,
    failed: &AtomicBool,
    manager: &Manager<X, B>,
) -> Result<T> {
    let deadline = Instant::now() + timeout;
    loop {
        if let Some(m) = inbox.recv_timeout(POLL.min(timeout))? {
            return Ok(m);
        }
        if failed.load(Ordering::SeqCst) {
            return Err(Error::Protocol(format!("a worker failed; manager state: {}", manager.dump())));
        }
        if Instant::now() >= deadline {
            return Err(stall(manager.epoch(), manager.dump()));
        }
    }
}

/// Returns the number of preempted draws.
fn worker_loop<M: BlockedAugmentedModel>(
    model: &M,
    j: usize,
    mut inbox: Box<dyn Inbox<Msg<M>>>,
    mut outbox: Box<dyn Outbox<Msg<M>>>,
    mut rng: RngStream,
    item_delay: Option<Duration>,
    stop: &AtomicBool,
) -> Result<u64> {
    let mut worker = Worker::new(j);
    let mut pending: Option<Msg<M>> = None;
    let mut preemptions = 0;
    loop {
        let msg = match pending.take() {
            Some(m) => m,
            None => loop {
                if stop.load(Ordering::SeqCst) {
                    return Ok(preemptions);
                }
                if let Some(m) = inbox.recv_timeout(POLL)? {
                    break m;
                }
            },
        };
        if worker.on_message(msg)? == WorkerEvent::Shutdown {
            return Ok(preemptions);
        }
        // Only the newest parameter is worth drawing from.
        while let Some(m) = inbox.try_recv()? {
            if worker.on_message(m)? == WorkerEvent::Shutdown {
                return Ok(preemptions);
            }
        }
        let Some((epoch, x)) = worker.current().map(|(e, x)| (e, x.clone())) else { continue };
        let mut stash: Option<Result<Msg<M>>> = None;
        let mut preempted = || {
            if let Some(d) = item_delay {
                thread::sleep(d);
            }
            match inbox.try_recv() {
                Ok(None) => false,
                Ok(Some(m)) => {
                    stash = Some(Ok(m));
                    true
                }
                Err(e) => {
                    stash = Some(Err(e));
                    true
                }
            }
        };
        match worker.draw(model, epoch, &x, &mut rng, &mut preempted)? {
            Some(update) => outbox.send(update)?,
            None => preemptions += 1,
        }
        pending = stash.transpose()?;
    }
}
