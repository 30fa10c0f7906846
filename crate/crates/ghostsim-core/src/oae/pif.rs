//! Echo-confirmed slice transfer.
//!
//! Every slice sent on a link is echoed back by the receiver. Because
//! propagation delay and slice time are physical constants, the sender knows
//! the outcome at exactly B = 2δ + 2s after it started transmitting: echo
//! arrived means delivered, no echo means the link failed and the slice is
//! reverted. There is no retry ladder and no tunable timeout — B is not a
//! guess, it is the physics of the wire.
//!
//! The receiver's side is symmetric but one carrier-detection lag behind: it
//! holds a received slice tentatively until it has watched its own
//! transmitter stay alive through the echo's arrival time (plus the lag `c`
//! it takes to notice carrier loss). If the echo path died, the receiver's
//! carrier alarm trips and it discards the tentative slice; the sender has
//! reverted, so nobody keeps it. The legal outcome pairs are therefore
//! exactly:
//!
//! | sender            | receiver                  |
//! |-------------------|---------------------------|
//! | delivered (at B)  | committed (at B + c)      |
//! | reverted (at B)   | discarded (carrier alarm) |
//! | reverted (at B)   | never received            |
//!
//! `delivered + discarded`, `delivered + never-received`, and
//! `reverted + committed` cannot occur; the exhaustive failure-offset sweep
//! in the tests checks every tick of the vulnerable window.

use serde::{Deserialize, Serialize};

use super::{direction_up, LinkFailure, OaeLinkParams};
use crate::time::SimTime;

/// What the receiving end ultimately does with the slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReceiverOutcome {
    /// Slice arrived and the echo path stayed up through the echo's arrival:
    /// the receiver commits once its carrier alarm window has passed.
    Committed { at: SimTime },
    /// Slice arrived but the echo path failed; the receiver's carrier alarm
    /// trips and the tentative slice is dropped.
    Discarded { at: SimTime },
    /// Slice never arrived.
    NeverReceived,
}

/// Complete, deterministic account of one slice transfer attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PifOutcome {
    pub sent_at: SimTime,
    /// Sender verdict: `true` means the echo arrived and the slice is
    /// confirmed delivered; `false` means the slice reverted to the sender.
    pub delivered: bool,
    /// When the sender knows: `sent_at + B`, or `sent_at` itself if the
    /// carrier alarm had already flagged the transmit direction dead.
    pub resolved_at: SimTime,
    pub receiver: ReceiverOutcome,
}

impl PifOutcome {
    pub fn reverted(&self) -> bool {
        !self.delivered
    }

    /// When both ends have settled into their final state.
    pub fn settled_at(&self) -> SimTime {
        match self.receiver {
            ReceiverOutcome::Committed { at } | ReceiverOutcome::Discarded { at } => {
                self.resolved_at.max(at)
            }
            ReceiverOutcome::NeverReceived => self.resolved_at,
        }
    }
}

/// Transfer one slice, starting transmission at `sent_at`, over a link whose
/// directions fail per `fail`. Pure function of its inputs: the bounded-delay
/// model leaves nothing to chance.
pub fn pif_transfer(params: &OaeLinkParams, fail: &LinkFailure, sent_at: SimTime) -> PifOutcome {
    // The sender's own carrier alarm: if the transmit direction died at least
    // one carrier lag ago, the sender already knows and reverts on the spot
    // without putting anything on the wire.
    if let Some(f) = fail.forward {
        if f + params.carrier_lag <= sent_at {
            return PifOutcome {
                sent_at,
                delivered: false,
                resolved_at: sent_at,
                receiver: ReceiverOutcome::NeverReceived,
            };
        }
    }

    let arrive = sent_at + params.one_way();
    let echo_arrive = sent_at + params.echo_bound();

    let forward_ok = direction_up(fail.forward, arrive);
    let delivered = forward_ok && direction_up(fail.reverse, echo_arrive);

    let receiver = if !forward_ok {
        ReceiverOutcome::NeverReceived
    } else if delivered {
        // The receiver's transmitter stayed alive through the echo's arrival;
        // after one more carrier lag of silence it knows that for certain.
        ReceiverOutcome::Committed { at: echo_arrive + params.carrier_lag }
    } else {
        // The echo path died at some f <= echo_arrive. The receiver's carrier
        // alarm trips at f + c; if that predates the slice's arrival, the
        // slice is rejected the moment it lands.
        let f = fail.reverse.expect("echo lost only if the reverse direction failed");
        let alarm = f + params.carrier_lag;
        ReceiverOutcome::Discarded { at: alarm.max(arrive) }
    };

    PifOutcome { sent_at, delivered, resolved_at: echo_arrive, receiver }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::SimDuration;

    fn p() -> OaeLinkParams {
        OaeLinkParams::default()
    }

    #[test]
    fn healthy_transfer_confirms_at_exactly_the_echo_bound() {
        let t0 = SimTime::from_micros(3);
        let out = pif_transfer(&p(), &LinkFailure::NONE, t0);
        assert!(out.delivered);
        assert_eq!(out.resolved_at, t0 + SimDuration::from_nanos_f64(1102.4));
        assert_eq!(
            out.receiver,
            ReceiverOutcome::Committed {
                at: t0 + SimDuration::from_nanos_f64(1102.4 + 51.2)
            }
        );
    }

    #[test]
    fn forward_failure_mid_flight_reverts_at_the_bound_and_never_arrives() {
        let t0 = SimTime::from_micros(1);
        // Dies while the slice is propagating.
        let fail = LinkFailure::forward_at(t0 + SimDuration::from_nanos(200));
        let out = pif_transfer(&p(), &fail, t0);
        assert!(out.reverted());
        assert_eq!(out.resolved_at, t0 + p().echo_bound());
        assert_eq!(out.receiver, ReceiverOutcome::NeverReceived);
    }

    #[test]
    fn echo_path_failure_after_delivery_reverts_sender_and_discards_receiver() {
        let t0 = SimTime::ZERO;
        // Slice lands at t0 + 551.2 ns; kill the echo path just after.
        let f = t0 + SimDuration::from_nanos(600);
        let out = pif_transfer(&p(), &LinkFailure::reverse_at(f), t0);
        assert!(out.reverted());
        assert_eq!(out.resolved_at, t0 + p().echo_bound());
        // Receiver had the slice but its carrier alarm trips one lag after
        // the failure; the tentative copy is dropped.
        assert_eq!(
            out.receiver,
            ReceiverOutcome::Discarded { at: f + p().carrier_lag }
        );
    }

    #[test]
    fn sending_on_a_known_dead_link_reverts_immediately() {
        let f = SimTime::from_nanos(100);
        let send = f + p().carrier_lag + SimDuration::from_ticks(1);
        let out = pif_transfer(&p(), &LinkFailure::forward_at(f), send);
        assert!(out.reverted());
        assert_eq!(out.resolved_at, send);
        assert_eq!(out.receiver, ReceiverOutcome::NeverReceived);
    }

    #[test]
    fn back_to_back_stream_on_a_healthy_link_all_confirm_in_order() {
        let params = p();
        let mut confirm = Vec::new();
        for k in 0..10_000u64 {
            let send = SimTime::ZERO + params.slice_time * k;
            let out = pif_transfer(&params, &LinkFailure::NONE, send);
            assert!(out.delivered);
            confirm.push(out.resolved_at);
        }
        assert!(confirm.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(confirm[0], SimTime::ZERO + params.echo_bound());
    }

    /// Every failure offset across the vulnerable window, both directions,
    /// single and simultaneous: the outcome pair must always be one of the
    /// three legal combinations and the sender must always resolve by the
    /// echo bound.
    #[test]
    fn exhaustive_offset_sweep_only_produces_legal_outcome_pairs() {
        let params = p();
        let send = SimTime::from_ticks(5_000);
        let b = params.echo_bound().ticks();
        let margin = 2_000;

        for off in 0..=(b + margin) {
            let f = SimTime::from_ticks(send.ticks() - 1_000 + off);
            for fail in [
                LinkFailure::forward_at(f),
                LinkFailure::reverse_at(f),
                LinkFailure::both(f),
            ] {
                let out = pif_transfer(&params, &fail, send);
                assert!(out.resolved_at <= send + params.echo_bound());
                match (out.delivered, out.receiver) {
                    (true, ReceiverOutcome::Committed { at }) => {
                        assert_eq!(at, send + params.echo_bound() + params.carrier_lag);
                    }
                    (false, ReceiverOutcome::Discarded { at }) => {
                        assert!(at >= send + params.one_way());
                        assert!(at <= send + params.echo_bound() + params.carrier_lag);
                    }
                    (false, ReceiverOutcome::NeverReceived) => {}
                    (d, r) => panic!("illegal outcome pair: delivered={d}, receiver={r:?}"),
                }
            }
        }
    }
}
