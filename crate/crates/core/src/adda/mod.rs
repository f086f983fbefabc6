//! Asynchronous distributed data augmentation.
//!
//! One manager holds the parameter `x` and the spliced latent
//! `(y^1, .., y^k)`; `k` workers each own one conditionally independent
//! latent block. Every epoch the manager tosses a coin: with probability
//! `epsilon` it waits for all `k` block updates, otherwise for the first
//! `ceil(k r)`. It then draws a new `x` from the spliced latent and
//! broadcasts it. Workers drawing from an older parameter abandon the draw
//! at the next item boundary; updates that still arrive late are discarded.
//!
//! Since each epoch either refreshes every block or refreshes a subset and
//! keeps the rest, and the selection does not look at the drawn values, the
//! joint `(x, y)` chain keeps the target invariant. The `x` sequence alone is
//! not Markov.
//!
//! Drivers: [`Driver::Scripted`] replays a fixed completion script,
//! [`Driver::Simulated`] runs a discrete-event simulation with a latency
//! model, and [`Driver::Threaded`] uses real threads.

mod blocked;
mod config;
mod engine;
mod exact;
mod protocol;
mod report;
mod schedule;
mod simulated;
mod threaded;
mod transport;

pub use blocked::{
    check_block_locality, factorization_deviation, BlockIndependence, Blocked, BlockedAugmentedModel, Partitionable,
    PerturbData, FACTORIZATION_TOL,
};
pub use config::AddaConfig;
pub use engine::{
    adda_run, adda_run_with_transport, blocked_da_run, AddaRun, AddaStats, Driver, ScriptedSession, ThreadedOptions,
};
pub use exact::{adda_exact_kernel_discrete, joint_da_kernel, unit_eigenvalue_count};
pub use protocol::{Manager, ProtocolMessage, Receipt, Worker, WorkerEvent};
pub use report::{adda_wall_clock_report, WallClockRow};
pub use schedule::{CompletionSchedule, EpochScript, LatencyModel};
pub use transport::{Channels, Fault, FaultyTransport, Inbox, InProcess, Outbox, Route, Transport};
