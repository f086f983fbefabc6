//! Messages and the two state machines of the protocol.
//!
//! The manager's state is exactly: the wait policy, the current epoch, the
//! current parameter `x`, the current spliced latent `(y^1, .., y^k)`, this
//! epoch's wait target and received flags, and the last epoch tag seen from
//! each worker. The last two are bookkeeping for ordering assertions and never
//! feed a draw, so the next `(x, y)` depends only on the current `(x, y)` and
//! fresh randomness.

use std::fmt::Debug;

use rand::Rng;

use super::blocked::BlockedAugmentedModel;
use super::config::AddaConfig;
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolMessage<X, B> {
    /// Manager to every worker: the parameter for `epoch`.
    ParamBroadcast { epoch: u64, x: X },
    /// Worker `block` to the manager: `y^block ~ f(y^block | x_epoch)`.
    BlockUpdate { block: usize, epoch: u64, y: B },
    /// Manager to every worker: stop.
    Shutdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Receipt {
    /// Spliced into the current latent; `complete` once the wait target is
    /// reached.
    Accepted { complete: bool },
    /// Computed from an older parameter; discarded.
    Stale,
}

#[derive(Clone, Debug)]
pub struct Manager<X, B> {
    config: AddaConfig,
    epoch: u64,
    x: X,
    blocks: Vec<B>,
    wait_target: usize,
    received: Vec<bool>,
    last_epoch_from: Vec<Option<u64>>,
}

impl<X: Clone + Debug, B: Clone> Manager<X, B> {
    pub fn new(config: AddaConfig, x: X, blocks: Vec<B>) -> Result<Self> {
        if blocks.len() != config.blocks() {
            return Err(Error::param(format!(
                "initial latent has {} blocks, configuration expects {}",
                blocks.len(),
                config.blocks()
            )));
        }
        let k = config.blocks();
        Ok(Self {
            wait_target: config.wait_count(),
            config,
            epoch: 0,
            x,
            blocks,
            received: vec![false; k],
            last_epoch_from: vec![None; k],
        })
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn x(&self) -> &X {
        &self.x
    }

    pub fn blocks(&self) -> &[B] {
        &self.blocks
    }

    pub fn wait_target(&self) -> usize {
        self.wait_target
    }

    fn received_count(&self) -> usize {
        self.received.iter().filter(|&&r| r).count()
    }

    /// The broadcast announcing the current epoch.
    pub fn broadcast(&self) -> ProtocolMessage<X, B> {
        ProtocolMessage::ParamBroadcast { epoch: self.epoch, x: self.x.clone() }
    }

    /// Tosses the full-wait coin for the current epoch and returns the wait
    /// target. The coin is skipped when it cannot matter.
    pub fn open_epoch(&mut self, rng: &mut RngStream) -> usize {
        let k = self.config.blocks();
        self.wait_target = if self.config.coin_needed() {
            if rng.random::<f64>() < self.config.epsilon() {
                k
            } else {
                self.config.wait_count()
            }
        } else if self.config.epsilon() >= 1.0 {
            k
        } else {
            self.config.wait_count()
        };
        self.wait_target
    }

    pub fn receive(&mut self, msg: ProtocolMessage<X, B>) -> Result<Receipt> {
        let (block, epoch, y) = match msg {
            ProtocolMessage::BlockUpdate { block, epoch, y } => (block, epoch, y),
            other => {
                return Err(self.violation(&format!("manager received {}", describe(&other))));
            }
        };
        if block >= self.config.blocks() {
            return Err(self.violation(&format!("update for unknown block {block}")));
        }
        if let Some(last) = self.last_epoch_from[block] {
            if epoch <= last {
                return Err(self.violation(&format!(
                    "worker {block} sent epoch {epoch} after epoch {last} (duplicated or reordered)"
                )));
            }
        }
        self.last_epoch_from[block] = Some(epoch);
        if epoch > self.epoch {
            return Err(self.violation(&format!("worker {block} sent future epoch {epoch}")));
        }
        if epoch < self.epoch || self.received_count() >= self.wait_target {
            return Ok(Receipt::Stale);
        }
        self.blocks[block] = y;
        self.received[block] = true;
        Ok(Receipt::Accepted { complete: self.received_count() >= self.wait_target })
    }

    /// Draws `x ~ f(x | y~)` from the spliced latent, advances the epoch and
    /// returns the new broadcast.
    pub fn close_epoch<M>(&mut self, model: &M, rng: &mut RngStream) -> Result<ProtocolMessage<X, B>>
    where
        M: BlockedAugmentedModel<State = X, Block = B>,
    {
        if self.received_count() < self.wait_target {
            return Err(self.violation("epoch closed before its wait target was reached"));
        }
        let y = model.join_latent(&self.blocks);
        self.x = model.draw_state(&y, rng)?;
        self.advance();
        Ok(self.broadcast())
    }

    /// Replaces `(x, y)` and starts a new epoch from it.
    pub fn restart(&mut self, x: X, blocks: Vec<B>) -> Result<ProtocolMessage<X, B>> {
        if blocks.len() != self.config.blocks() {
            return Err(Error::param("restart latent has the wrong number of blocks"));
        }
        self.x = x;
        self.blocks = blocks;
        self.advance();
        Ok(self.broadcast())
    }

    fn advance(&mut self) {
        self.epoch += 1;
        self.received.iter_mut().for_each(|r| *r = false);
    }

    /// Human-readable state for protocol errors.
    pub fn dump(&self) -> String {
        format!(
            "epoch {}, wait target {}, received {:?}, last epoch per worker {:?}, x {:?}",
            self.epoch, self.wait_target, self.received, self.last_epoch_from, self.x
        )
    }

    fn violation(&self, what: &str) -> Error {
        Error::Protocol(format!("{what}; manager state: {}", self.dump()))
    }
}

fn describe<X, B>(msg: &ProtocolMessage<X, B>) -> String {
    match msg {
        ProtocolMessage::ParamBroadcast { epoch, .. } => format!("a parameter broadcast (epoch {epoch})"),
        ProtocolMessage::BlockUpdate { block, epoch, .. } => format!("an update (block {block}, epoch {epoch})"),
        ProtocolMessage::Shutdown => "a shutdown".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WorkerEvent {
    NewParameter { epoch: u64 },
    Shutdown,
}

/// Worker `block`: keeps the latest broadcast parameter and draws its block
/// from it.
#[derive(Clone, Debug)]
pub struct Worker<X> {
    block: usize,
    epoch: Option<u64>,
    x: Option<X>,
}

impl<X: Clone> Worker<X> {
    pub fn new(block: usize) -> Self {
        Self { block, epoch: None, x: None }
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Broadcast epochs must arrive as 0, 1, 2, ...; a gap, repeat or
    /// decrease means the channel lost, duplicated or reordered a message.
    pub fn on_message<B>(&mut self, msg: ProtocolMessage<X, B>) -> Result<WorkerEvent> {
        match msg {
            ProtocolMessage::ParamBroadcast { epoch, x } => {
                let expected = self.epoch.map_or(0, |e| e + 1);
                if epoch != expected {
                    return Err(Error::Protocol(format!(
                        "worker {} expected broadcast epoch {expected}, got {epoch}",
                        self.block
                    )));
                }
                self.epoch = Some(epoch);
                self.x = Some(x);
                Ok(WorkerEvent::NewParameter { epoch })
            }
            ProtocolMessage::Shutdown => Ok(WorkerEvent::Shutdown),
            ProtocolMessage::BlockUpdate { .. } => {
                Err(Error::Protocol(format!("worker {} received a block update", self.block)))
            }
        }
    }

    pub fn current(&self) -> Option<(u64, &X)> {
        Some((self.epoch?, self.x.as_ref()?))
    }

    /// Draws this worker's block from `x` (broadcast as `epoch`), or `None`
    /// if preempted.
    pub fn draw<M, B>(
        &self,
        model: &M,
        epoch: u64,
        x: &X,
        rng: &mut RngStream,
        preempted: &mut dyn FnMut() -> bool,
    ) -> Result<Option<ProtocolMessage<X, B>>>
    where
        M: BlockedAugmentedModel<State = X, Block = B>,
    {
        Ok(model
            .draw_block(self.block, x, rng, preempted)?
            .map(|y| ProtocolMessage::BlockUpdate { block: self.block, epoch, y }))
    }
}
