//! Phi-accrual failure detection over heartbeat inter-arrival history.
//!
//! The peer emits heartbeats every `hb_interval`; the detector keeps the last
//! `window` inter-arrival times and converts current silence into a suspicion
//! score φ = −log10(P_later(elapsed)), where P_later is the tail of the
//! distribution fitted to the window. Dead when φ ≥ threshold.
//!
//! The default fit is exponential: P_later(t) = exp(−t/mean), so
//! φ(t) = t / (mean·ln 10) — linear in elapsed time, which gives a closed
//! form for both the score and the threshold-crossing instant. The original
//! normal fit is available as [`TailFit::Normal`]; with deterministic
//! heartbeats its sample deviation collapses, so σ is floored at mean/10.
//!
//! Cold start: until the window holds `window` samples the subject is alive
//! and no deadline is armed. Outage gaps are recorded like any other
//! inter-arrival, so a detector that just declared death becomes slower to
//! re-suspect — the adaptive behavior that distinguishes φ from a fixed τ.

use std::collections::VecDeque;
use std::f64::consts::LN_10;

use crate::detectors::{DetectorVerdict, LinkDetector, ProbeSample, Status, Wake};
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailFit {
    Exponential,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParams {
    pub hb_interval: SimDuration,
    pub window: usize,
    pub threshold: f64,
    pub fit: TailFit,
}

impl Default for PhiParams {
    fn default() -> Self {
        PhiParams {
            hb_interval: SimDuration::from_millis(100),
            window: 8,
            threshold: 2.0,
            fit: TailFit::Exponential,
        }
    }
}

/// Ring of recent inter-arrival durations, in seconds.
#[derive(Debug, Clone, Default)]
pub struct HeartbeatHistory {
    samples: VecDeque<f64>,
    capacity: usize,
}

impl HeartbeatHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        HeartbeatHistory { samples: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, inter_arrival_secs: f64) {
        assert!(inter_arrival_secs > 0.0, "inter-arrivals must be positive");
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(inter_arrival_secs);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var =
            self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.samples.len() as f64;
        var.sqrt()
    }
}

/// Suspicion score for `elapsed` seconds of silence against a history.
/// Undefined (returns 0, treated alive) while the history is empty.
pub fn phi_value(history: &HeartbeatHistory, elapsed_secs: f64, fit: TailFit) -> f64 {
    if history.is_empty() || elapsed_secs <= 0.0 {
        return 0.0;
    }
    match fit {
        Exponential => elapsed_secs / (history.mean() * LN_10),
        Normal => {
            let mean = history.mean();
            let sigma = history.std_dev().max(mean / 10.0);
            let tail = normal_tail((elapsed_secs - mean) / sigma);
            -tail.max(f64::MIN_POSITIVE).log10()
        }
    }
}

use TailFit::{Exponential, Normal};

/// Q(z) = P(Z > z) for standard normal Z, via the Abramowitz–Stegun erf
/// polynomial (abs error < 1.5e-7).
fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

/// Smallest silence (seconds) at which φ reaches `threshold`.
fn crossing_secs(history: &HeartbeatHistory, threshold: f64, fit: TailFit) -> f64 {
    match fit {
        Exponential => threshold * history.mean() * LN_10,
        Normal => {
            let mean = history.mean();
            let sigma = history.std_dev().max(mean / 10.0);
            // Bisect Q(z) = 10^-threshold; Q is strictly decreasing.
            let target = 10f64.powf(-threshold);
            let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if normal_tail(mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            mean + sigma * 0.5 * (lo + hi)
        }
    }
}

#[derive(Debug)]
pub struct PhiAccrualDetector {
    link: LinkId,
    params: PhiParams,
    history: HeartbeatHistory,
    t_last: SimTime,
    next_slot: SimTime,
    deadline: Option<SimTime>,
    believed_up: bool,
}

impl PhiAccrualDetector {
    pub fn new(link: LinkId, params: PhiParams) -> Self {
        assert!(params.threshold > 0.0);
        PhiAccrualDetector {
            link,
            history: HeartbeatHistory::new(params.window),
            // Session establishment counts as contact at t=0.
            t_last: SimTime::ZERO,
            next_slot: SimTime::ZERO + params.hb_interval,
            deadline: None,
            believed_up: true,
            params,
        }
    }

    fn arm_deadline(&mut self) {
        self.deadline = if self.history.is_full() {
            let cross = crossing_secs(&self.history, self.params.threshold, self.params.fit);
            Some(self.t_last + SimDuration::from_secs_f64(cross))
        } else {
            None
        };
    }

    fn next_wake(&self, now: SimTime) -> Option<SimTime> {
        let mut next = self.next_slot;
        if let Some(d) = self.deadline {
            if self.believed_up && d > now {
                next = next.min(d);
            }
        }
        Some(next)
    }
}

impl LinkDetector for PhiAccrualDetector {
    fn name(&self) -> &'static str {
        "phi-accrual"
    }

    fn first_wake(&self) -> SimTime {
        self.next_slot
    }

    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake {
        let mut verdicts = Vec::new();
        // A heartbeat slot due now is processed before any deadline at the
        // same instant: arrival refutes suspicion.
        if now >= self.next_slot {
            if sample.up {
                let gap = now.since(self.t_last).ticks() as f64
                    / crate::time::TICKS_PER_SEC as f64;
                self.history.push(gap);
                self.t_last = now;
                if !self.believed_up {
                    self.believed_up = true;
                    verdicts.push(DetectorVerdict {
                        subject: self.link,
                        status: Status::Alive,
                        t: now,
                        suspicion: 0.0,
                    });
                }
                self.arm_deadline();
            }
            self.next_slot = self.next_slot + self.params.hb_interval;
        }
        if let Some(d) = self.deadline {
            if self.believed_up && now >= d {
                let elapsed =
                    now.since(self.t_last).ticks() as f64 / crate::time::TICKS_PER_SEC as f64;
                let phi = phi_value(&self.history, elapsed, self.params.fit);
                self.believed_up = false;
                self.deadline = None;
                verdicts.push(DetectorVerdict {
                    subject: self.link,
                    status: Status::Dead,
                    t: now,
                    suspicion: phi,
                });
            }
        }
        Wake { verdicts, observed_bandwidth: None, next: self.next_wake(now) }
    }
}
