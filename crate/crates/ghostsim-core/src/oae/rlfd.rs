//! Three-node failure-detection triangles.
//!
//! Arrange three nodes so every pair is linked. When one link fails, both of
//! its endpoints learn within the echo bound B of that link (a slice or
//! keepalive is always outstanding, and its echo fails to return). Each
//! endpoint then tells the third node over its surviving link — a single
//! slice, arriving one serialization plus one propagation later. All three
//! members therefore agree the link is down within B plus one notification
//! hop, with zero variance: detection latency here is a property of the
//! wires, not of a tuned timeout.
//!
//! Detection is pinned at exactly t0 + B, the latest instant the bound
//! allows. Real endpoints with a keepalive mid-flight may learn slightly
//! earlier; reporting the bound keeps the model deterministic and makes
//! every derived ghost window a conservative upper bound.
//!
//! The same triangle also gives failover for free: slices reverted by the
//! failed link are re-sent over the two surviving links through the third
//! node, cut-through, so the only added cost is the detour's extra
//! propagation. Sequence numbers deduplicate at the destination, and a
//! second link failure mid-failover degrades the triangle and escalates.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::pif::{pif_transfer, ReceiverOutcome};
use super::{LinkFailure, OaeLinkParams};
use crate::error::{Error, Result};
use crate::time::{SimDuration, SimTime};
use crate::topology::{LinkId, NodeId};

/// Three nodes, three links. Edge `k` joins `nodes[k]` and `nodes[(k+1)%3]`;
/// the node opposite edge `k` is `nodes[(k+2)%3]`.
#[derive(Debug, Clone)]
pub struct Triangle {
    pub nodes: [NodeId; 3],
    pub link_ids: [LinkId; 3],
    pub params: [OaeLinkParams; 3],
}

impl Triangle {
    pub fn new(nodes: [NodeId; 3], link_ids: [LinkId; 3], params: [OaeLinkParams; 3]) -> Result<Self> {
        if nodes[0] == nodes[1] || nodes[1] == nodes[2] || nodes[0] == nodes[2] {
            return Err(Error::config("triangle nodes must be distinct"));
        }
        if link_ids[0] == link_ids[1] || link_ids[1] == link_ids[2] || link_ids[0] == link_ids[2] {
            return Err(Error::config("triangle links must be distinct"));
        }
        Ok(Triangle { nodes, link_ids, params })
    }

    /// All three links share the same physical constants.
    pub fn equilateral(nodes: [NodeId; 3], link_ids: [LinkId; 3], params: OaeLinkParams) -> Result<Self> {
        Triangle::new(nodes, link_ids, [params, params, params])
    }

    fn endpoints(&self, edge: usize) -> (usize, usize) {
        (edge, (edge + 1) % 3)
    }

    fn opposite(&self, edge: usize) -> usize {
        (edge + 2) % 3
    }

    /// The edge joining node indices `a` and `b`.
    fn edge_between(&self, a: usize, b: usize) -> usize {
        for e in 0..3 {
            let (x, y) = self.endpoints(e);
            if (x, y) == (a, b) || (y, x) == (a, b) {
                return e;
            }
        }
        unreachable!("a triangle joins every node pair");
    }
}

/// When each member of the triangle updates its belief about a failed link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleConvergence {
    pub failed_link: LinkId,
    pub failed_at: SimTime,
    /// The two endpoints of the failed link, with their detection instants
    /// (exactly failure + B of that link).
    pub endpoint_updates: [(NodeId, SimTime); 2],
    /// The third member, updated by the first notification slice to arrive.
    pub third_update: (NodeId, SimTime),
    /// All three members agree from this instant on.
    pub converged_at: SimTime,
}

/// Outcome of watching one failure window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TriangleObservation {
    /// Nothing failed; nobody's belief changed.
    NoFailure,
    /// One link failed and all three members converged on that fact.
    Converged(TriangleConvergence),
    /// Two or more links failed: the triangle is degraded and the problem
    /// escalates to the enclosing graph.
    Escalated { failed_links: Vec<LinkId>, at: SimTime },
}

/// Observe the triangle under whole-link failures given as
/// `(edge index, failure instant)` pairs.
pub fn observe(tri: &Triangle, failures: &[(usize, SimTime)]) -> Result<TriangleObservation> {
    for &(edge, _) in failures {
        if edge >= 3 {
            return Err(Error::config(format!("triangle edge index {edge} out of range")));
        }
    }
    // Several failure instants on one edge collapse to the earliest.
    let mut per_edge: [Option<SimTime>; 3] = [None; 3];
    for &(edge, t) in failures {
        per_edge[edge] = Some(per_edge[edge].map_or(t, |cur: SimTime| cur.min(t)));
    }
    let mut failed: Vec<(usize, SimTime)> =
        (0..3).filter_map(|e| per_edge[e].map(|t| (e, t))).collect();

    match failed.len() {
        0 => Ok(TriangleObservation::NoFailure),
        1 => {
            let (edge, t0) = failed[0];
            Ok(TriangleObservation::Converged(converge_single(tri, edge, t0)))
        }
        _ => {
            failed.sort_by_key(|&(_, t)| t);
            let at = failed[1].1; // degraded once the second link dies
            Ok(TriangleObservation::Escalated {
                failed_links: failed.iter().map(|&(e, _)| tri.link_ids[e]).collect(),
                at,
            })
        }
    }
}

fn converge_single(tri: &Triangle, edge: usize, t0: SimTime) -> TriangleConvergence {
    let (a, b) = tri.endpoints(edge);
    let third = tri.opposite(edge);
    let detect = t0 + tri.params[edge].echo_bound();

    // Each endpoint notifies the third node over its surviving link.
    let from_a = detect + tri.params[tri.edge_between(a, third)].one_way();
    let from_b = detect + tri.params[tri.edge_between(b, third)].one_way();
    let third_at = from_a.min(from_b);

    TriangleConvergence {
        failed_link: tri.link_ids[edge],
        failed_at: t0,
        endpoint_updates: [(tri.nodes[a], detect), (tri.nodes[b], detect)],
        third_update: (tri.nodes[third], third_at),
        converged_at: detect.max(third_at),
    }
}

/// What happened to the slices that were in flight on a failed link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailoverOutcome {
    /// `(seq, arrival at the destination)`, in arrival order. Slices whose
    /// original transfer had already been confirmed arrive directly; the
    /// rest arrive via the detour.
    pub delivered: Vec<(u64, SimTime)>,
    /// Detour arrivals suppressed because that seq was already delivered.
    pub duplicates: u64,
    /// Seqs that could not be delivered (only with a second failure).
    pub undelivered: Vec<u64>,
    /// Extra propagation cost of the detour path versus the direct link.
    pub detour_extra_latency: SimDuration,
    /// A second link failed mid-failover; the triangle is degraded.
    pub escalated: bool,
}

/// Re-route the slices pending on a failed edge through the third node.
///
/// `sender_end` (0 or 1) says which endpoint of the failed edge was sending;
/// `pending` lists `(seq, original send instant)` for every slice whose
/// outcome was not yet known to the sender when the link died at `t0`.
/// A `second_failure` of a detour edge degrades the triangle.
pub fn failover_reroute(
    tri: &Triangle,
    failed_edge: usize,
    sender_end: usize,
    pending: &[(u64, SimTime)],
    t0: SimTime,
    second_failure: Option<(usize, SimTime)>,
) -> Result<FailoverOutcome> {
    if failed_edge >= 3 {
        return Err(Error::config(format!("triangle edge index {failed_edge} out of range")));
    }
    if sender_end >= 2 {
        return Err(Error::config("sender_end must be 0 or 1"));
    }
    let (e0, e1) = tri.endpoints(failed_edge);
    let (sender, dest) = if sender_end == 0 { (e0, e1) } else { (e1, e0) };
    let third = tri.opposite(failed_edge);
    let up_edge = tri.edge_between(sender, third); // sender -> third
    let down_edge = tri.edge_between(third, dest); // third -> dest
    if let Some((edge2, _)) = second_failure {
        if edge2 != up_edge && edge2 != down_edge {
            return Err(Error::config(
                "second failure must hit one of the two detour links",
            ));
        }
    }

    let direct = &tri.params[failed_edge];
    let up = &tri.params[up_edge];
    let down = &tri.params[down_edge];
    let extra = (up.delta + down.delta) - direct.delta;

    let fail = LinkFailure::both(t0);
    let mut sorted: Vec<(u64, SimTime)> = pending.to_vec();
    sorted.sort_by_key(|&(seq, t)| (t, seq));

    let mut arrivals: Vec<(SimTime, u64)> = Vec::new();
    let mut undelivered = Vec::new();
    let mut escalated = second_failure.is_some();
    let mut resend_front = SimTime::ZERO;

    for &(seq, sent_at) in &sorted {
        let out = pif_transfer(direct, &fail, sent_at);
        if out.delivered {
            // Confirmed before the failure: it already arrived directly.
            arrivals.push((sent_at + direct.one_way(), seq));
            continue;
        }
        // Reverted: re-send over the detour as soon as the revert lands and
        // the detour transmitter is free. The third node forwards cut-through,
        // so the slice is serialized once and then rides both propagation
        // legs back to back.
        let start = out.resolved_at.max(resend_front);
        resend_front = start + up.slice_time;
        let at_third = start + up.slice_time + up.delta;
        let at_dest = at_third + down.delta;
        let lost = match second_failure {
            Some((edge2, t2)) if edge2 == up_edge => at_third >= t2,
            Some((edge2, t2)) if edge2 == down_edge => at_dest >= t2,
            _ => false,
        };
        if lost {
            undelivered.push(seq);
            escalated = true;
        } else {
            arrivals.push((at_dest, seq));
        }
    }

    arrivals.sort();
    let mut seen = BTreeSet::new();
    let mut delivered = Vec::new();
    let mut duplicates = 0;
    for (at, seq) in arrivals {
        if seen.insert(seq) {
            delivered.push((seq, at));
        } else {
            duplicates += 1;
        }
    }

    Ok(FailoverOutcome { delivered, duplicates, undelivered, detour_extra_latency: extra, escalated })
}

/// Convenience used by scenarios: did the original transfer leave a
/// tentative copy at the destination that the discard rule then cleaned up?
pub fn original_was_discarded(params: &OaeLinkParams, t0: SimTime, sent_at: SimTime) -> bool {
    matches!(
        pif_transfer(params, &LinkFailure::both(t0), sent_at).receiver,
        ReceiverOutcome::Discarded { .. }
    )
}
