//! Deterministic discrete-event simulation of topology "ghosts": the gap
//! between what a network is and what its observers believe it is.
//!
//! Failure detectors built on timeout-and-retry can only move a belief after
//! silence has lasted long enough, so every real failure leaves a window in
//! which some observer routes to a dead link — and every false suspicion
//! marks a live one dead. This crate measures those windows precisely:
//!
//! - [`kernel`]: the event engine — virtual clock, total event order, seeded
//!   named RNG streams, bit-identical traces per (config, seed).
//! - [`topology`]: actual vs. believed graphs and the ghost ledger.
//! - [`faults`]: fleet-scale flap/hard-failure/silent-degrade schedules.
//! - [`detectors`]: the timeout-and-retry family (fixed timeout, phi accrual,
//!   BFD, Kubernetes node lifecycle, SWIM, status polling).
//! - [`oae`]: bounded-delay link machinery where detection is a physical
//!   constant, not a guess — echo confirmation, triangle detection and
//!   failover, atomic token transfer.
//! - [`workload`]: retry amplification, metastable hysteresis, checkpoint
//!   non-atomicity arithmetic.
//! - [`scenario`]: declarative configs composing all of the above into
//!   reproducible runs with CSV/JSON artifacts.

pub mod error;
pub mod faults;
pub mod kernel;
pub mod rng;
pub mod time;
pub mod topology;

pub mod detectors;
pub mod fleet;
pub mod oae;
pub mod scenario;
pub mod workload;

pub use error::{Error, Result};
pub use kernel::{ComponentId, Engine, Event, EventHandle, RunSummary};
pub use rng::{RngStream, SeedDomain};
pub use scenario::{run_scenario, write_artifacts, RunOutput, RunReport, ScenarioConfig};
pub use time::{SimDuration, SimTime};
pub use topology::{
    GhostKind, GhostRecord, GhostStats, Graph, LinkId, LinkState, NodeId, ObserverId,
    TopologyTracker,
};
