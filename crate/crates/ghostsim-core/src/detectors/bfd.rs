//! BFD-style hello session with flap-damping suppression.
//!
//! Hellos arrive every `tx_interval`; the session declares the link down once
//! `detect_multiplier` consecutive expected hellos have gone missing. A miss
//! is only confirmed when the following slot also passes empty, so the
//! verdict lands at `last_rx + (multiplier + 1) · interval`: with the 10 ms /
//! ×3 fast profile a failure is declared 30–40 ms after it happens.
//!
//! Each down verdict counts as a flap. Three flaps inside any sliding 15 s
//! window put the session into suppression: the hello interval is raised to
//! `suppressed_interval`, stretching every subsequent detection (and ghost)
//! window by the same factor. The raised interval halves for every 60 s the
//! session stays flap-free, until it is back at the fast rate.

use std::collections::VecDeque;

use crate::detectors::{DetectorVerdict, LinkDetector, ProbeSample, Status, Wake};
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfdParams {
    pub tx_interval: SimDuration,
    pub detect_multiplier: u32,
    pub suppress_flap_count: usize,
    pub suppress_window: SimDuration,
    pub suppressed_interval: SimDuration,
    /// Interval halves per this much flap-free time while suppressed.
    pub decay_after: SimDuration,
}

impl Default for BfdParams {
    fn default() -> Self {
        BfdParams {
            tx_interval: SimDuration::from_millis(10),
            detect_multiplier: 3,
            suppress_flap_count: 3,
            suppress_window: SimDuration::from_secs(15),
            suppressed_interval: SimDuration::from_secs(1),
            decay_after: SimDuration::from_secs(60),
        }
    }
}

#[derive(Debug)]
pub struct BfdSession {
    link: LinkId,
    params: BfdParams,
    believed_up: bool,
    next_slot: SimTime,
    deadline: Option<SimTime>,
    flap_times: VecDeque<SimTime>,
    /// (interval at suppression entry, time of the triggering flap).
    raised: Option<(SimDuration, SimTime)>,
}

impl BfdSession {
    pub fn new(link: LinkId, params: BfdParams) -> Self {
        assert!(params.tx_interval.ticks() > 0);
        assert!(params.detect_multiplier > 0);
        assert!(params.suppressed_interval > params.tx_interval);
        BfdSession {
            link,
            believed_up: true,
            next_slot: SimTime::ZERO + params.tx_interval,
            // Session established at t=0 counts as contact.
            deadline: Some(SimTime::ZERO + params.tx_interval * (params.detect_multiplier as u64 + 1)),
            flap_times: VecDeque::new(),
            raised: None,
            params,
        }
    }

    pub fn suppressed(&self) -> bool {
        self.raised.is_some()
    }

    /// Hello interval currently in force, after suppression decay.
    pub fn effective_interval(&self, now: SimTime) -> SimDuration {
        match self.raised {
            None => self.params.tx_interval,
            Some((raised, since)) => {
                let steps = now.since(since).ticks() / self.params.decay_after.ticks().max(1);
                let decayed = SimDuration::from_ticks(
                    (raised.ticks() >> steps.min(63)).max(self.params.tx_interval.ticks()),
                );
                decayed
            }
        }
    }

    fn settle_decay(&mut self, now: SimTime) {
        if self.raised.is_some() && self.effective_interval(now) == self.params.tx_interval {
            self.raised = None;
        }
    }

    fn detect_window(&self, now: SimTime) -> SimDuration {
        self.effective_interval(now) * (self.params.detect_multiplier as u64 + 1)
    }

    fn record_flap(&mut self, now: SimTime) {
        self.flap_times.push_back(now);
        while let Some(&front) = self.flap_times.front() {
            if now.since(front) > self.params.suppress_window {
                self.flap_times.pop_front();
            } else {
                break;
            }
        }
        if self.flap_times.len() >= self.params.suppress_flap_count {
            self.raised = Some((self.params.suppressed_interval, now));
        } else if let Some((raised, _)) = self.raised {
            // Flapping while suppressed re-anchors the decay clock.
            self.raised = Some((raised.max(self.effective_interval(now)), now));
        }
    }
}

impl LinkDetector for BfdSession {
    fn name(&self) -> &'static str {
        "bfd"
    }

    fn first_wake(&self) -> SimTime {
        self.next_slot
    }

    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake {
        let mut verdicts = Vec::new();
        self.settle_decay(now);
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
                self.deadline = Some(now + self.detect_window(now));
            }
            self.next_slot = now + self.effective_interval(now);
        }
        if let Some(d) = self.deadline {
            if self.believed_up && now >= d {
                self.believed_up = false;
                self.deadline = None;
                verdicts.push(DetectorVerdict {
                    subject: self.link,
                    status: Status::Dead,
                    t: now,
                    suspicion: 0.0,
                });
                self.record_flap(now);
            }
        }
        let mut next = self.next_slot;
        if let Some(d) = self.deadline {
            if self.believed_up && d > now {
                next = next.min(d);
            }
        }
        Wake { verdicts, observed_bandwidth: None, next: Some(next) }
    }
}
