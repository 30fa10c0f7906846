//! The baseline timeout-and-retry prober.
//!
//! While the link is believed up, a probe goes out every `poll`. A probe that
//! gets no reply starts the retry ladder: wait the full timeout τ for the
//! first reply, then send up to R quick retries each waiting one rtt. If the
//! ladder ends in silence the link is declared dead at
//! `first_failed_probe + τ + R·rtt`, so detection latency from the actual
//! failure lands in `[τ + R·rtt, τ + R·rtt + poll]` — inside the classic
//! `[τ, τ + R·rtt + poll]` bracket.
//!
//! The regular cadence is suspended during a ladder (one poll period of slack
//! total, not one per retry). A flap that recovers before any probe samples
//! it is never seen at all: that is the TAR trade, not a bug.

use crate::detectors::{DetectorVerdict, LinkDetector, ProbeSample, Status, Wake};
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTimeoutParams {
    pub poll: SimDuration,
    pub timeout: SimDuration,
    pub retries: u32,
    pub rtt: SimDuration,
}

impl Default for FixedTimeoutParams {
    fn default() -> Self {
        FixedTimeoutParams {
            poll: SimDuration::from_millis(5),
            timeout: SimDuration::from_millis(50),
            retries: 0,
            rtt: SimDuration::from_millis(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    /// Believed up; next wake is a regular probe send.
    Polling,
    /// A probe failed; next wake sends retry `attempt` (1-based) or, past
    /// `retries`, declares death.
    Ladder { attempt: u32 },
    /// Believed dead; next wake is a recovery probe send.
    DeadPolling,
    /// A probe from DeadPolling succeeded; next wake is its reply arriving.
    AwaitRecoveryReply,
}

#[derive(Debug)]
pub struct FixedTimeoutProber {
    link: LinkId,
    params: FixedTimeoutParams,
    state: State,
    start: SimTime,
}

impl FixedTimeoutProber {
    pub fn new(link: LinkId, params: FixedTimeoutParams) -> Self {
        assert!(params.timeout.ticks() > 0, "timeout must be positive");
        assert!(params.poll.ticks() > 0, "poll period must be positive");
        FixedTimeoutProber { link, params, state: State::Polling, start: SimTime::ZERO }
    }

    pub fn params(&self) -> FixedTimeoutParams {
        self.params
    }

    fn verdict(&self, status: Status, t: SimTime) -> DetectorVerdict {
        DetectorVerdict { subject: self.link, status, t, suspicion: 0.0 }
    }
}

impl LinkDetector for FixedTimeoutProber {
    fn name(&self) -> &'static str {
        "fixed-timeout"
    }

    fn first_wake(&self) -> SimTime {
        self.start
    }

    fn wake(&mut self, now: SimTime, sample: ProbeSample) -> Wake {
        let p = self.params;
        match self.state {
            State::Polling => {
                if sample.up {
                    // Reply will arrive; nothing changes, keep cadence.
                    Wake { next: Some(now + p.poll), ..Wake::default() }
                } else {
                    self.state = State::Ladder { attempt: 1 };
                    Wake { next: Some(now + p.timeout), ..Wake::default() }
                }
            }
            State::Ladder { attempt } => {
                if sample.up {
                    // Retry got through; its reply confirms life. Belief never
                    // changed, so no verdict — resume the cadence.
                    self.state = State::Polling;
                    return Wake { next: Some(now + p.poll), ..Wake::default() };
                }
                if attempt <= p.retries {
                    self.state = State::Ladder { attempt: attempt + 1 };
                    Wake { next: Some(now + p.rtt), ..Wake::default() }
                } else {
                    self.state = State::DeadPolling;
                    Wake {
                        verdicts: vec![self.verdict(Status::Dead, now)],
                        next: Some(now + p.poll),
                        ..Wake::default()
                    }
                }
            }
            State::DeadPolling => {
                if sample.up {
                    self.state = State::AwaitRecoveryReply;
                    Wake { next: Some(now + p.rtt), ..Wake::default() }
                } else {
                    Wake { next: Some(now + p.poll), ..Wake::default() }
                }
            }
            State::AwaitRecoveryReply => {
                // Reply content was fixed at send time; it confirms life.
                self.state = State::Polling;
                Wake {
                    verdicts: vec![self.verdict(Status::Alive, now)],
                    next: Some(now + p.poll),
                    ..Wake::default()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::testutil::{first_dead, outages};
    use crate::detectors::run_detector;
    use crate::faults::LinkTimeline;

    const LINK: LinkId = LinkId(0);
    fn ms(v: u64) -> SimDuration {
        SimDuration::from_millis(v)
    }

    #[test]
    fn zero_retries_detects_within_timeout_plus_poll() {
        let params = FixedTimeoutParams { poll: ms(5), timeout: ms(50), retries: 0, rtt: ms(1) };
        let t0 = SimTime::from_millis(123);
        let tl = outages(LINK, &[(t0, SimTime::from_secs(10))]);
        let mut det = FixedTimeoutProber::new(LINK, params);
        let run = run_detector(&mut det, &tl, SimTime::from_secs(20)).unwrap();
        let dead = first_dead(&run).expect("persistent failure must be detected");
        let latency = dead.since(t0);
        assert!(latency >= ms(50), "latency {latency} below timeout");
        assert!(latency <= ms(55), "latency {latency} above timeout + poll");
    }

    #[test]
    fn retries_extend_the_deadline_by_rtt_each() {
        let params = FixedTimeoutParams { poll: ms(5), timeout: ms(50), retries: 3, rtt: ms(2) };
        let t0 = SimTime::from_millis(200);
        let tl = outages(LINK, &[(t0, SimTime::from_secs(10))]);
        let mut det = FixedTimeoutProber::new(LINK, params);
        let run = run_detector(&mut det, &tl, SimTime::from_secs(20)).unwrap();
        let dead = first_dead(&run).unwrap();
        let latency = dead.since(t0);
        // τ + R·rtt = 56 ms, plus at most one poll period.
        assert!(latency >= ms(56), "latency {latency}");
        assert!(latency <= ms(61), "latency {latency}");
    }

    #[test]
    fn healthy_link_yields_no_verdicts() {
        let tl = LinkTimeline::default();
        let mut det = FixedTimeoutProber::new(LINK, FixedTimeoutParams::default());
        let run = run_detector(&mut det, &tl, SimTime::from_secs(60)).unwrap();
        assert!(run.verdicts.is_empty());
    }

    #[test]
    fn flap_shorter_than_timeout_can_evade_detection() {
        // Down for 8 ms starting just after a probe: the next probe samples at
        // +poll and the ladder's retry finds the link back up.
        let params = FixedTimeoutParams { poll: ms(5), timeout: ms(50), retries: 0, rtt: ms(1) };
        let t0 = SimTime::from_millis(101);
        let tl = outages(LINK, &[(t0, t0 + ms(8))]);
        let mut det = FixedTimeoutProber::new(LINK, params);
        let run = run_detector(&mut det, &tl, SimTime::from_secs(2)).unwrap();
        assert!(run.verdicts.is_empty(), "short flap must slip through: {:?}", run.verdicts);
    }

    #[test]
    fn recovery_is_noticed_within_poll_plus_rtt() {
        let params = FixedTimeoutParams { poll: ms(5), timeout: ms(50), retries: 0, rtt: ms(1) };
        let t0 = SimTime::from_millis(100);
        let t1 = SimTime::from_millis(400);
        let tl = outages(LINK, &[(t0, t1)]);
        let mut det = FixedTimeoutProber::new(LINK, params);
        let run = run_detector(&mut det, &tl, SimTime::from_secs(2)).unwrap();
        let alive = run
            .verdicts
            .iter()
            .find(|v| v.status == Status::Alive)
            .expect("recovery must be confirmed");
        let lag = alive.t.since(t1);
        assert!(lag <= ms(6), "recovery lag {lag} above poll + rtt");
        assert_eq!(run.verdicts.len(), 2, "exactly one dead and one alive");
    }

    #[test]
    fn repeated_outages_alternate_verdicts() {
        let params = FixedTimeoutParams { poll: ms(5), timeout: ms(20), retries: 1, rtt: ms(1) };
        let s = SimTime::from_millis;
        let tl = outages(LINK, &[(s(100), s(300)), (s(500), s(700)), (s(900), s(1100))]);
        let mut det = FixedTimeoutProber::new(LINK, params);
        let run = run_detector(&mut det, &tl, SimTime::from_secs(2)).unwrap();
        let statuses: Vec<Status> = run.verdicts.iter().map(|v| v.status).collect();
        assert_eq!(
            statuses,
            vec![
                Status::Dead,
                Status::Alive,
                Status::Dead,
                Status::Alive,
                Status::Dead,
                Status::Alive
            ]
        );
    }
}
