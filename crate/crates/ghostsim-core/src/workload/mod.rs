//! Workload dynamics: retry amplification, metastable hysteresis, and
//! checkpoint atomicity.
//!
//! - [`queue`]: a bounded FIFO queue with deterministic service times and
//!   clients that time out and retry. Shows how a temporary capacity dip
//!   turns into a self-sustaining retry storm, and how shedding retries
//!   breaks the loop.
//! - [`checkpoint`]: the probability that a K-shard checkpoint ends up
//!   half-written when shards persist independently, plus the feedback loop
//!   where checkpoint work itself raises the failure rate.

pub mod checkpoint;
pub mod queue;
