//! Controller-side node lifecycle: status updates, grace period, eviction.
//!
//! The kubelet posts node status every `status_period` (10 s default) over
//! its uplink; the controller can only notice silence once an update is
//! missed, so the unreachable deadline runs from the first missed slot:
//! `last_rx + status_period + grace`. With the 40 s grace default a partition
//! is declared 40–50 s after it starts, inside the documented 40–340 s
//! reaction window whose upper edge is the 300 s pod-eviction timeout.
//!
//! The node itself keeps running its pods throughout — only the controller's
//! belief changes, which is exactly the ghost this detector manufactures.

use crate::detectors::{DetectorVerdict, LinkDetector, ProbeSample, Status, Wake};
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K8sParams {
    pub status_period: SimDuration,
    pub grace: SimDuration,
    pub eviction: SimDuration,
}

impl Default for K8sParams {
    fn default() -> Self {
        K8sParams {
            status_period: SimDuration::from_secs(10),
            grace: SimDuration::from_secs(40),
            eviction: SimDuration::from_secs(300),
        }
    }
}

#[derive(Debug)]
pub struct K8sNodeMonitor {
    link: LinkId,
    params: K8sParams,
    believed_up: bool,
    next_slot: SimTime,
    deadline: Option<SimTime>,
    eviction_due: Option<SimTime>,
    evictions: Vec<SimTime>,
}

impl K8sNodeMonitor {
    pub fn new(link: LinkId, params: K8sParams) -> Self {
        assert!(params.status_period.ticks() > 0);
        assert!(params.grace.ticks() > 0);
        K8sNodeMonitor {
            link,
            believed_up: true,
            next_slot: SimTime::ZERO + params.status_period,
            deadline: Some(SimTime::ZERO + params.status_period + params.grace),
            eviction_due: None,
            evictions: Vec::new(),
            params,
        }
    }

    /// Times at which pod eviction fired.
    pub fn evictions(&self) -> &[SimTime] {
        &self.evictions
    }
}

impl LinkDetector for K8sNodeMonitor {
    fn name(&self) -> &'static str {
        "k8s-node-lifecycle"
    }

    fn first_wake(&self) -> SimTime {
        self.next_slot
    }

    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake {
        let mut verdicts = Vec::new();
        if now >= self.next_slot {
            if sample.up {
                if !self.believed_up {
                    self.believed_up = true;
                    verdicts.push(DetectorVerdict {
                        subject: self.link,
                        status: Status::Alive,
                        t: now,
                        suspicion: 0.0,
                    });
                }
                self.deadline = Some(now + self.params.status_period + self.params.grace);
                // A ready node is no longer an eviction candidate.
                self.eviction_due = None;
            }
            self.next_slot = now + self.params.status_period;
        }
        if let Some(d) = self.deadline {
            if self.believed_up && now >= d {
                self.believed_up = false;
                self.deadline = None;
                self.eviction_due = Some(d + self.params.eviction);
                verdicts.push(DetectorVerdict {
                    subject: self.link,
                    status: Status::Dead,
                    t: now,
                    suspicion: 0.0,
                });
            }
        }
        if let Some(e) = self.eviction_due {
            if now >= e {
                self.evictions.push(e);
                self.eviction_due = None;
            }
        }
        let mut next = self.next_slot;
        if let Some(d) = self.deadline {
            if self.believed_up && d > now {
                next = next.min(d);
            }
        }
        if let Some(e) = self.eviction_due {
            if e > now {
                next = next.min(e);
            }
        }
        Wake { verdicts, observed_bandwidth: None, next: Some(next) }
    }
}
