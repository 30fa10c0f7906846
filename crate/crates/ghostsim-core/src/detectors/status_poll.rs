//! Explicit status polling: reads the link's registers instead of inferring
//! from silence. The only detector in the family that can see a silent
//! bandwidth degrade, because degrades change no reachability signal — they
//! are visible solely to something that asks.

use crate::detectors::{DetectorVerdict, LinkDetector, ProbeSample, Status, Wake};
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatusPollParams {
    pub period: SimDuration,
}

impl Default for StatusPollParams {
    fn default() -> Self {
        StatusPollParams { period: SimDuration::from_secs(30) }
    }
}

#[derive(Debug)]
pub struct StatusPollDetector {
    link: LinkId,
    period: SimDuration,
    believed_up: bool,
    believed_bandwidth: f64,
}

impl StatusPollDetector {
    pub fn new(link: LinkId, params: StatusPollParams) -> Self {
        assert!(params.period.ticks() > 0);
        StatusPollDetector {
            link,
            period: params.period,
            believed_up: true,
            believed_bandwidth: 1.0,
        }
    }
}

impl LinkDetector for StatusPollDetector {
    fn name(&self) -> &'static str {
        "status-poll"
    }

    fn first_wake(&self) -> SimTime {
        SimTime::ZERO + self.period
    }

    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake {
        let mut verdicts = Vec::new();
        let mut observed = None;
        if sample.up != self.believed_up {
            self.believed_up = sample.up;
            verdicts.push(DetectorVerdict {
                subject: self.link,
                status: if sample.up { Status::Alive } else { Status::Dead },
                t: now,
                suspicion: 0.0,
            });
        }
        if sample.bandwidth_factor != self.believed_bandwidth {
            self.believed_bandwidth = sample.bandwidth_factor;
            observed = Some(sample.bandwidth_factor);
        }
        Wake { verdicts, observed_bandwidth: observed, next: Some(now + self.period) }
    }
}
