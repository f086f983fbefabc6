//! Message channels between the manager and the workers.
//!
//! Every route is a reliable FIFO channel in the default in-process
//! transport. [`FaultyTransport`] breaks one route on purpose so tests can
//! confirm that the protocol's epoch checks notice.

use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::time::Duration;

use crate::{Error, Result};

pub trait Outbox<T>: Send {
    fn send(&mut self, msg: T) -> Result<()>;
}

pub trait Inbox<T>: Send {
    /// `Ok(None)` when nothing is queued.
    fn try_recv(&mut self) -> Result<Option<T>>;
    /// `Ok(None)` on timeout.
    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<T>>;
}

/// All endpoints for one manager and `k` workers.
pub struct Channels<T> {
    /// `to_manager[j]` is worker `j`'s sending end.
    pub to_manager: Vec<Box<dyn Outbox<T>>>,
    pub manager_inbox: Box<dyn Inbox<T>>,
    /// `to_workers[j]` is the manager's sending end towards worker `j`.
    pub to_workers: Vec<Box<dyn Outbox<T>>>,
    pub worker_inboxes: Vec<Box<dyn Inbox<T>>>,
}

pub trait Transport {
    fn connect<T: Clone + Send + 'static>(&self, workers: usize) -> Channels<T>;
}

/// `std::sync::mpsc` channels.
#[derive(Clone, Copy, Debug, Default)]
pub struct InProcess;

struct MpscOut<T>(Sender<T>);

impl<T: Send> Outbox<T> for MpscOut<T> {
    fn send(&mut self, msg: T) -> Result<()> {
        self.0.send(msg).map_err(|_| Error::Protocol("receiver hung up".into()))
    }
}

struct MpscIn<T>(Receiver<T>);

impl<T: Send> Inbox<T> for MpscIn<T> {
    fn try_recv(&mut self) -> Result<Option<T>> {
        match self.0.try_recv() {
            Ok(m) => Ok(Some(m)),
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(Error::Protocol("all senders hung up".into())),
        }
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Option<T>> {
        match self.0.recv_timeout(timeout) {
            Ok(m) => Ok(Some(m)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Protocol("all senders hung up".into())),
        }
    }
}

impl Transport for InProcess {
    fn connect<T: Clone + Send + 'static>(&self, workers: usize) -> Channels<T> {
        let (tx, rx) = mpsc::channel();
        let to_manager = (0..workers).map(|_| Box::new(MpscOut(tx.clone())) as Box<dyn Outbox<T>>).collect();
        let (to_workers, worker_inboxes) = (0..workers)
            .map(|_| {
                let (tx, rx) = mpsc::channel();
                (Box::new(MpscOut(tx)) as Box<dyn Outbox<T>>, Box::new(MpscIn(rx)) as Box<dyn Inbox<T>>)
            })
            .unzip();
        Channels {
            to_manager,
            manager_inbox: Box::new(MpscIn(rx)),
            to_workers,
            worker_inboxes,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// From worker `j` to the manager.
    ToManager(usize),
    /// From the manager to worker `j`.
    ToWorker(usize),
}

/// What happens to the `at`-th message (0-based) sent on the faulty route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    Drop { at: usize },
    Duplicate { at: usize },
    /// Held back and delivered right after the next message on the route.
    Reorder { at: usize },
}

/// Wraps another transport and applies one fault to one route.
#[derive(Clone, Copy, Debug)]
pub struct FaultyTransport<Tr> {
    pub inner: Tr,
    pub route: Route,
    pub fault: Fault,
}

struct FaultyOut<T> {
    inner: Box<dyn Outbox<T>>,
    fault: Fault,
    sent: usize,
    held: Option<T>,
}

impl<T: Clone + Send> Outbox<T> for FaultyOut<T> {
    fn send(&mut self, msg: T) -> Result<()> {
        let index = self.sent;
        self.sent += 1;
        match self.fault {
            Fault::Drop { at } if at == index => Ok(()),
            Fault::Duplicate { at } if at == index => {
                self.inner.send(msg.clone())?;
                self.inner.send(msg)
            }
            Fault::Reorder { at } if at == index => {
                self.held = Some(msg);
                Ok(())
            }
            _ => {
                self.inner.send(msg)?;
                match self.held.take() {
                    Some(h) => self.inner.send(h),
                    None => Ok(()),
                }
            }
        }
    }
}

impl<Tr: Transport> Transport for FaultyTransport<Tr> {
    fn connect<T: Clone + Send + 'static>(&self, workers: usize) -> Channels<T> {
        let mut ch = self.inner.connect(workers);
        let slot = match self.route {
            Route::ToManager(j) => ch.to_manager.get_mut(j),
            Route::ToWorker(j) => ch.to_workers.get_mut(j),
        };
        if let Some(slot) = slot {
            let inner = std::mem::replace(slot, Box::new(Discard));
            *slot = Box::new(FaultyOut { inner, fault: self.fault, sent: 0, held: None });
        }
        ch
    }
}

struct Discard;

impl<T> Outbox<T> for Discard {
    fn send(&mut self, _msg: T) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(inbox: &mut Box<dyn Inbox<u32>>) -> Vec<u32> {
        let mut v = Vec::new();
        while let Some(m) = inbox.try_recv().unwrap() {
            v.push(m);
        }
        v
    }

    #[test]
    fn in_process_is_fifo_per_sender() {
        let mut ch = InProcess.connect::<u32>(2);
        for i in 0..5 {
            ch.to_manager[0].send(i).unwrap();
        }
        assert_eq!(drain(&mut ch.manager_inbox), vec![0, 1, 2, 3, 4]);
        ch.to_workers[1].send(7).unwrap();
        assert_eq!(drain(&mut ch.worker_inboxes[1]), vec![7]);
        assert!(drain(&mut ch.worker_inboxes[0]).is_empty());
    }

    #[test]
    fn faults_apply_to_one_route() {
        let run = |fault| {
            let t = FaultyTransport { inner: InProcess, route: Route::ToManager(1), fault };
            let mut ch = t.connect::<u32>(2);
            for i in 0..4 {
                ch.to_manager[1].send(i).unwrap();
            }
            ch.to_manager[0].send(99).unwrap();
            drain(&mut ch.manager_inbox)
        };
        assert_eq!(run(Fault::Drop { at: 1 }), vec![0, 2, 3, 99]);
        assert_eq!(run(Fault::Duplicate { at: 2 }), vec![0, 1, 2, 2, 3, 99]);
        assert_eq!(run(Fault::Reorder { at: 0 }), vec![1, 0, 2, 3, 99]);
    }
}
