//! Crate-wide error type.
//!
//! Two families matter to callers: configuration errors (bad scenario input,
//! CLI exit code 1) and invariant violations detected mid-run (simulator bug
//! or impossible schedule, CLI exit code 2).

use crate::time::SimTime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration or scenario input.
    #[error("config error: {0}")]
    Config(String),

    /// An event was scheduled before the current simulation clock.
    #[error("event scheduled in the past: fire_at {fire_at} < now {now}")]
    ScheduleInPast { fire_at: SimTime, now: SimTime },

    /// A runtime invariant did not hold.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// True for errors a user can fix by editing the scenario.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_))
    }
}
