//! Timeout-and-retry failure detectors.
//!
//! Every detector here turns silence into a belief change, and therefore
//! opens a ghost window on every real failure: the belief cannot move before
//! the detector's minimum silence threshold has elapsed. The family:
//!
//! - [`fixed_timeout::FixedTimeoutProber`] — probe, wait τ, retry R times.
//! - [`phi::PhiAccrualDetector`] — continuous suspicion from heartbeat gaps.
//! - [`bfd::BfdSession`] — fast hellos with flap-triggered suppression.
//! - [`k8s::K8sNodeMonitor`] — controller-side node lifecycle (grace, eviction).
//! - [`status_poll::StatusPollDetector`] — explicit polling; the only member
//!   that can see silent bandwidth degradation.
//!
//! SWIM lives in [`swim`] as a multi-member simulation rather than a single
//! link watcher.
//!
//! Detectors are pure state machines woken at times they themselves request;
//! at each wake they sample the actual link (what a probe sent now would see)
//! and may emit verdicts. The driver [`run_detector`] executes one detector
//! against a link timeline on the event kernel.

pub mod bfd;
pub mod fixed_timeout;
pub mod k8s;
pub mod phi;
pub mod status_poll;
pub mod swim;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::faults::LinkTimeline;
use crate::kernel::{ComponentId, Engine};
use crate::time::SimTime;
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Alive,
    Suspect,
    Dead,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Alive => write!(f, "alive"),
            Status::Suspect => write!(f, "suspect"),
            Status::Dead => write!(f, "dead"),
        }
    }
}

/// One emitted status change. `suspicion` carries the φ value where the
/// detector has one, 0.0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub subject: LinkId,
    pub status: Status,
    pub t: SimTime,
    pub suspicion: f64,
}

/// What the detector saw when it sampled the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub up: bool,
    pub bandwidth_factor: f64,
}

/// Output of one wakeup: zero or more verdicts effective now, an optional
/// bandwidth observation (status polling only), and the next wakeup.
/// `next: None` halts the detector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Wake {
    pub verdicts: Vec<DetectorVerdict>,
    pub observed_bandwidth: Option<f64>,
    pub next: Option<SimTime>,
}

pub trait LinkDetector {
    fn name(&self) -> &'static str;
    /// First wakeup to schedule after construction.
    fn first_wake(&self) -> SimTime;
    /// Handle a wakeup at `now`. `sample` is the actual link state at `now`.
    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake;
}

/// Every verdict plus bandwidth observation a detector produced over
/// `[0, horizon)` against one link's timeline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectorRun {
    pub verdicts: Vec<DetectorVerdict>,
    /// (t, factor) pairs from status polls.
    pub bandwidth_observations: Vec<(SimTime, f64)>,
}

/// Drive one detector against one link timeline on the event kernel.
pub fn run_detector(
    detector: &mut dyn LinkDetector,
    timeline: &LinkTimeline,
    horizon: SimTime,
) -> Result<DetectorRun> {
    let mut engine: Engine<()> = Engine::new();
    let target = ComponentId(0);
    let mut out = DetectorRun::default();
    if detector.first_wake() < horizon {
        engine.schedule(detector.first_wake(), target, ())?;
    }
    engine.run_until(horizon, |eng, ev| {
        let now = ev.fire_at;
        let sample = ProbeSample {
            up: timeline.up_at(now),
            bandwidth_factor: timeline.bandwidth_at(now),
        };
        let wake = detector.wake(now, sample);
        out.verdicts.extend(wake.verdicts.iter().copied());
        if let Some(bw) = wake.observed_bandwidth {
            out.bandwidth_observations.push((now, bw));
        }
        if let Some(next) = wake.next {
            if next < horizon {
                eng.schedule(next, target, ())?;
            }
        }
        Ok(())
    })?;
    Ok(out)
}

/// Write verdicts as CSV: `detector,subject,status,t,suspicion`.
pub fn write_verdict_csv<W: std::io::Write>(
    detector: &str,
    verdicts: &[DetectorVerdict],
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["detector", "subject", "status", "t", "suspicion"])?;
    for v in verdicts {
        w.write_record([
            detector.to_string(),
            v.subject.to_string(),
            v.status.to_string(),
            v.t.ticks().to_string(),
            format!("{}", v.suspicion),
        ])?;
    }
    w.flush()?;
    Ok(())
}
