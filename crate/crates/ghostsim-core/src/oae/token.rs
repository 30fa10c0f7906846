//! Atomic token transfer over an echo-confirmed link.
//!
//! A token is unique ownership of something (a lock, a leader role, a
//! migrating object). Moving it across a link must never duplicate it and
//! never lose it, even when the link dies mid-transfer. The echo discipline
//! makes that possible without any third party:
//!
//! 1. the sender transmits the token slice and stops treating the token as
//!    transferable (it is now in flight),
//! 2. the receiver holds the arriving token tentatively,
//! 3. the echo confirms delivery to the sender at exactly B = 2δ + 2s,
//! 4. the receiver commits one carrier lag later, certain the echo made it.
//!
//! If any direction fails, the sender reverts to owning the token at B and
//! the receiver's carrier alarm makes it discard the tentative copy — the
//! same physical bound that confirms delivery also guarantees agreement on
//! failure. At every instant the token has exactly one position: at the
//! sender, at the receiver, in flight forward, or in flight reverting, and
//! in-flight states always resolve within B.

use serde::{Deserialize, Serialize};

use super::pif::{pif_transfer, PifOutcome, ReceiverOutcome};
use super::{LinkFailure, OaeLinkParams};
use crate::time::SimTime;

/// Unique ownership marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub id: u64,
}

/// Where the token is at a given instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenPosition {
    AtSender,
    AtReceiver,
    InFlightForward,
    InFlightReverting,
}

/// One transfer attempt across one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenTransfer {
    pub token: Token,
    pub params: OaeLinkParams,
    pub fail: LinkFailure,
    pub outcome: PifOutcome,
}

/// Attempt to move `token` across the link starting at `sent_at`.
pub fn token_transfer(
    params: &OaeLinkParams,
    fail: &LinkFailure,
    token: Token,
    sent_at: SimTime,
) -> TokenTransfer {
    TokenTransfer {
        token,
        params: *params,
        fail: *fail,
        outcome: pif_transfer(params, fail, sent_at),
    }
}

impl TokenTransfer {
    pub fn succeeded(&self) -> bool {
        self.outcome.delivered
    }

    /// When the sender knows the outcome (release on success, retain on
    /// failure).
    pub fn sender_resolved_at(&self) -> SimTime {
        self.outcome.resolved_at
    }

    /// When the receiver is certain it owns the token. Only meaningful for a
    /// successful transfer.
    pub fn receiver_commit_at(&self) -> Option<SimTime> {
        match self.outcome.receiver {
            ReceiverOutcome::Committed { at } => Some(at),
            _ => None,
        }
    }

    /// The instant the transfer was physically doomed, for a failed
    /// transfer that actually made it onto the wire.
    fn kill_instant(&self) -> Option<SimTime> {
        if self.outcome.delivered || self.outcome.resolved_at == self.outcome.sent_at {
            return None;
        }
        let arrive = self.outcome.sent_at + self.params.one_way();
        let echo_arrive = self.outcome.sent_at + self.params.echo_bound();
        let fwd = self.fail.forward.filter(|&f| f <= arrive);
        let rev = self.fail.reverse.filter(|&f| f <= echo_arrive);
        let kill = match (fwd, rev) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("failed transfer must have a failed direction"),
        };
        Some(kill.max(self.outcome.sent_at))
    }

    /// The token's position at `t`. Total and single-valued: at every
    /// instant the token is in exactly one place.
    pub fn position_at(&self, t: SimTime) -> TokenPosition {
        let sent = self.outcome.sent_at;
        let resolved = self.outcome.resolved_at;
        if t < sent || resolved == sent {
            // Before the attempt, or an attempt on a known-dead link that
            // never left the sender.
            return TokenPosition::AtSender;
        }
        if self.outcome.delivered {
            if t < resolved {
                TokenPosition::InFlightForward
            } else {
                TokenPosition::AtReceiver
            }
        } else if t >= resolved {
            TokenPosition::AtSender
        } else {
            let kill = self.kill_instant().expect("failed on-wire transfer has a kill instant");
            if t < kill {
                TokenPosition::InFlightForward
            } else {
                TokenPosition::InFlightReverting
            }
        }
    }
}

/// One link in a multi-hop chain.
#[derive(Debug, Clone, Copy)]
pub struct ChainHop {
    pub params: OaeLinkParams,
    pub fail: LinkFailure,
}

/// A token forwarded node 0 -> 1 -> ... -> n. Each node launches the next
/// hop only once it has committed; a failed hop leaves the token with that
/// hop's sender and stops the chain.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub start: SimTime,
    pub transfers: Vec<TokenTransfer>,
    /// Node index (0-based) that owns the token when the dust settles.
    pub final_holder: usize,
    pub settled_at: SimTime,
}

pub fn forward_through_chain(token: Token, hops: &[ChainHop], start: SimTime) -> ChainRun {
    let mut transfers = Vec::with_capacity(hops.len());
    let mut t = start;
    for (i, hop) in hops.iter().enumerate() {
        let xfer = token_transfer(&hop.params, &hop.fail, token, t);
        let settled = xfer.outcome.settled_at();
        let commit = xfer.receiver_commit_at();
        let ok = xfer.succeeded();
        transfers.push(xfer);
        match (ok, commit) {
            (true, Some(c)) => t = c,
            _ => {
                return ChainRun { start, transfers, final_holder: i, settled_at: settled };
            }
        }
    }
    ChainRun { start, transfers, final_holder: hops.len(), settled_at: t }
}

/// Per-node intervals during which that node believes it owns the token
/// (half-open, clipped to `horizon`). A sender keeps its claim until the
/// echo confirms delivery; a receiver claims only once committed. Safety
/// means these intervals never overlap.
pub fn ownership_claims(run: &ChainRun, horizon: SimTime) -> Vec<(usize, SimTime, SimTime)> {
    let mut claims = Vec::new();
    let mut claim_start = SimTime::ZERO;
    for (i, xfer) in run.transfers.iter().enumerate() {
        if xfer.succeeded() {
            claims.push((i, claim_start, xfer.sender_resolved_at().min(horizon)));
            claim_start = xfer
                .receiver_commit_at()
                .expect("successful transfer commits the receiver");
        } else {
            // Chain stopped here; the sender never let go.
            claims.push((i, claim_start, horizon));
            return claims;
        }
    }
    claims.push((run.transfers.len(), claim_start, horizon));
    claims
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedDomain;
    use crate::time::SimDuration;

    fn p() -> OaeLinkParams {
        OaeLinkParams::default()
    }

    fn tok() -> Token {
        Token { id: 7 }
    }

    #[test]
    fn healthy_transfer_walks_through_the_expected_positions() {
        let t0 = SimTime::from_micros(10);
        let xfer = token_transfer(&p(), &LinkFailure::NONE, tok(), t0);
        let b = p().echo_bound();
        assert!(xfer.succeeded());
        assert_eq!(xfer.position_at(t0 - SimDuration::from_ticks(1)), TokenPosition::AtSender);
        assert_eq!(xfer.position_at(t0), TokenPosition::InFlightForward);
        assert_eq!(
            xfer.position_at(t0 + b - SimDuration::from_ticks(1)),
            TokenPosition::InFlightForward
        );
        assert_eq!(xfer.position_at(t0 + b), TokenPosition::AtReceiver);
        assert_eq!(xfer.receiver_commit_at(), Some(t0 + b + p().carrier_lag));
    }

    #[test]
    fn echo_failure_reverts_ownership_to_the_sender() {
        let t0 = SimTime::ZERO;
        let f = t0 + SimDuration::from_nanos(700); // after delivery, before echo return
        let xfer = token_transfer(&p(), &LinkFailure::reverse_at(f), tok(), t0);
        let b = p().echo_bound();
        assert!(!xfer.succeeded());
        assert_eq!(xfer.position_at(f - SimDuration::from_ticks(1)), TokenPosition::InFlightForward);
        assert_eq!(xfer.position_at(f), TokenPosition::InFlightReverting);
        assert_eq!(xfer.position_at(t0 + b), TokenPosition::AtSender);
        assert!(matches!(xfer.outcome.receiver, ReceiverOutcome::Discarded { .. }));
    }

    #[test]
    fn known_dead_link_never_puts_the_token_in_flight() {
        let f = SimTime::from_nanos(50);
        let send = f + p().carrier_lag + SimDuration::from_millis(1);
        let xfer = token_transfer(&p(), &LinkFailure::both(f), tok(), send);
        assert!(!xfer.succeeded());
        assert_eq!(xfer.position_at(send), TokenPosition::AtSender);
        assert_eq!(xfer.position_at(send + SimDuration::from_secs(1)), TokenPosition::AtSender);
    }

    /// Every failure offset, both directions and simultaneous: the token's
    /// position trajectory must be a legal sequence, resolve by the echo
    /// bound, and end owned by exactly one side, consistent with what each
    /// side believes.
    #[test]
    fn exhaustive_offset_sweep_keeps_the_token_singular() {
        let params = p();
        let send = SimTime::from_ticks(20_000);
        let b = params.echo_bound();

        for off in 0..=(b.ticks() + 2_000) {
            let f = SimTime::from_ticks(send.ticks() - 1_000 + off);
            for fail in [
                LinkFailure::forward_at(f),
                LinkFailure::reverse_at(f),
                LinkFailure::both(f),
            ] {
                let xfer = token_transfer(&params, &fail, tok(), send);
                let resolved = xfer.sender_resolved_at();
                assert!(resolved <= send + b, "must resolve within the echo bound");

                // At and after resolution the token is never in flight.
                let settled = xfer.position_at(resolved);
                match (xfer.succeeded(), settled) {
                    (true, TokenPosition::AtReceiver) | (false, TokenPosition::AtSender) => {}
                    other => panic!("inconsistent settlement: {other:?} (fail at {f:?})"),
                }

                // Sender and receiver must agree: exactly one keeps it.
                match (xfer.succeeded(), xfer.outcome.receiver) {
                    (true, ReceiverOutcome::Committed { .. }) => {}
                    (false, ReceiverOutcome::Discarded { .. })
                    | (false, ReceiverOutcome::NeverReceived) => {}
                    (d, r) => panic!("sender/receiver disagree: delivered={d}, receiver={r:?}"),
                }

                // Position trajectory is monotone through the legal order.
                let mut last_rank = -1i32;
                for t in [
                    send,
                    send + SimDuration::from_ticks(1),
                    send + params.one_way(),
                    send + b - SimDuration::from_ticks(1),
                    send + b,
                    send + b * 2,
                ] {
                    let rank = match xfer.position_at(t) {
                        TokenPosition::InFlightForward => 0,
                        TokenPosition::InFlightReverting => 1,
                        TokenPosition::AtSender | TokenPosition::AtReceiver => 2,
                    };
                    assert!(rank >= last_rank, "position went backwards at {t:?}");
                    last_rank = rank;
                }
            }
        }
    }

    #[test]
    fn healthy_chain_hands_over_hop_by_hop() {
        let hops = vec![ChainHop { params: p(), fail: LinkFailure::NONE }; 3];
        let run = forward_through_chain(tok(), &hops, SimTime::ZERO);
        assert_eq!(run.final_holder, 3);
        let per_hop = p().echo_bound() + p().carrier_lag;
        assert_eq!(run.settled_at, SimTime::ZERO + per_hop * 3);

        let horizon = run.settled_at + SimDuration::from_micros(1);
        let claims = ownership_claims(&run, horizon);
        assert_eq!(claims.len(), 4);
        assert!(claims.windows(2).all(|w| w[0].2 <= w[1].1), "claims overlap");
        assert_eq!(claims.last().unwrap().0, 3);
        assert_eq!(claims.last().unwrap().2, horizon);
    }

    /// Randomized chains with one failing hop somewhere: ownership claims
    /// never overlap, exactly one node holds the token at the horizon, and
    /// every hop lands in a legal outcome pair.
    #[test]
    fn randomized_chains_conserve_the_token() {
        let domain = SeedDomain::new(0xC0DE);
        let mut rng = domain.stream("token.chains");
        for trial in 0..10_000u32 {
            let n_hops = rng.range_usize(2, 7);
            let mut hops = Vec::with_capacity(n_hops);
            for _ in 0..n_hops {
                let delta = SimDuration::from_ticks(rng.range_usize(1_000, 20_000) as u64);
                let s = SimDuration::from_ticks(rng.range_usize(100, 1_000) as u64);
                hops.push(ChainHop {
                    params: OaeLinkParams { delta, slice_time: s, carrier_lag: s },
                    fail: LinkFailure::NONE,
                });
            }
            // 80% of trials inject one failure on a random hop.
            if rng.chance(0.8) {
                let victim = rng.range_usize(0, n_hops);
                let worst_case: u64 = hops
                    .iter()
                    .map(|h| (h.params.echo_bound() + h.params.carrier_lag).ticks())
                    .sum();
                let f = SimTime::from_ticks(rng.range_usize(0, worst_case as usize + 1) as u64);
                hops[victim].fail = match rng.range_usize(0, 3) {
                    0 => LinkFailure::forward_at(f),
                    1 => LinkFailure::reverse_at(f),
                    _ => LinkFailure::both(f),
                };
            }

            let run = forward_through_chain(Token { id: trial as u64 }, &hops, SimTime::ZERO);
            assert!(run.final_holder <= n_hops);
            if hops.iter().all(|h| h.fail == LinkFailure::NONE) {
                assert_eq!(run.final_holder, n_hops, "healthy chain must complete");
            }

            for xfer in &run.transfers {
                let b = xfer.params.echo_bound();
                assert!(xfer.sender_resolved_at() <= xfer.outcome.sent_at + b);
                match (xfer.succeeded(), xfer.outcome.receiver) {
                    (true, ReceiverOutcome::Committed { .. }) => {}
                    (false, ReceiverOutcome::Discarded { .. })
                    | (false, ReceiverOutcome::NeverReceived) => {}
                    (d, r) => panic!("trial {trial}: illegal pair delivered={d} {r:?}"),
                }
            }

            let horizon = run.settled_at + SimDuration::from_micros(1);
            let claims = ownership_claims(&run, horizon);
            for w in claims.windows(2) {
                assert!(w[0].2 <= w[1].1, "trial {trial}: overlapping ownership claims");
            }
            let holders: Vec<_> = claims.iter().filter(|c| c.2 == horizon).collect();
            assert_eq!(holders.len(), 1, "trial {trial}: exactly one final holder");
            assert_eq!(holders[0].0, run.final_holder);
        }
    }
}
