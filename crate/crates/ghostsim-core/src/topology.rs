//! Actual vs. believed topology, and the ghost ledger.
//!
//! The tracker holds one actual graph and one believed graph per observer.
//! A ghost is an interval during which an observer's belief about a link
//! disagrees with the actual link state. Beliefs and actuality share a fixed
//! identifier universe: observers never gain or lose nodes/links, they only
//! hold stale attribute values, which keeps the graph diff well defined.
//!
//! Ghost kinds:
//! - `StaleUp`: believed up, actually down — the classic ghost.
//! - `StaleDown`: believed down, actually up — a false positive.
//! - `SilentDegrade`: both sides agree the link is up but disagree on its
//!   bandwidth factor (e.g. a PCIe-style silent fallback to 1/12.8 rate).
//!
//! Flaps shorter than one tick would produce zero-length records; those are
//! recorded with duration = 1 tick so statistics stay divide-safe.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{SimDuration, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Per-link attributes that beliefs can go stale on.
///
/// `bandwidth_factor` is 1.0 at full rate and in (0, 1) when silently
/// degraded. Belief updates copy actual values verbatim, so exact `f64`
/// comparison is sound here. A down link always carries factor 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub up: bool,
    pub bandwidth_factor: f64,
}

impl LinkState {
    pub const UP: LinkState = LinkState { up: true, bandwidth_factor: 1.0 };
    pub const DOWN: LinkState = LinkState { up: false, bandwidth_factor: 1.0 };

    pub fn degraded(factor: f64) -> LinkState {
        LinkState { up: true, bandwidth_factor: factor }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub state: LinkState,
}

/// A graph over a fixed node/link identifier universe.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Graph {
    nodes: Vec<NodeId>,
    links: BTreeMap<LinkId, Link>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(id);
        id
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId) -> Result<LinkId> {
        if !self.nodes.contains(&a) || !self.nodes.contains(&b) {
            return Err(Error::config(format!("link endpoints {a},{b} must exist")));
        }
        let id = LinkId(self.links.len() as u32);
        self.links.insert(id, Link { a, b, state: LinkState::UP });
        Ok(id)
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn link_ids(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.links.keys().copied()
    }

    pub fn link(&self, id: LinkId) -> Result<&Link> {
        self.links
            .get(&id)
            .ok_or_else(|| Error::invariant(format!("unknown link {id}")))
    }

    fn link_mut(&mut self, id: LinkId) -> Result<&mut Link> {
        self.links
            .get_mut(&id)
            .ok_or_else(|| Error::invariant(format!("unknown link {id}")))
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Two nodes plus the link between them.
    pub fn pair() -> (Graph, LinkId) {
        let mut g = Graph::new();
        let a = g.add_node();
        let b = g.add_node();
        let l = g.add_link(a, b).unwrap();
        (g, l)
    }

    /// Hub node 0 with `n` leaves; link i connects the hub to leaf i+1.
    pub fn star(n: u32) -> (Graph, Vec<LinkId>) {
        let mut g = Graph::new();
        let hub = g.add_node();
        let links = (0..n)
            .map(|_| {
                let leaf = g.add_node();
                g.add_link(hub, leaf).unwrap()
            })
            .collect();
        (g, links)
    }

    /// Three nodes, three links forming a cycle: l0=(0,1), l1=(1,2), l2=(0,2).
    pub fn triangle() -> (Graph, [LinkId; 3]) {
        let mut g = Graph::new();
        let a = g.add_node();
        let b = g.add_node();
        let c = g.add_node();
        let ab = g.add_link(a, b).unwrap();
        let bc = g.add_link(b, c).unwrap();
        let ac = g.add_link(a, c).unwrap();
        (g, [ab, bc, ac])
    }
}

/// Who holds a belief: a participating node, or an out-of-band controller
/// (the Kubernetes-style global view).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ObserverId {
    Controller,
    Node(NodeId),
}

impl fmt::Display for ObserverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObserverId::Controller => write!(f, "controller"),
            ObserverId::Node(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GhostKind {
    StaleUp,
    StaleDown,
    SilentDegrade,
}

impl fmt::Display for GhostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GhostKind::StaleUp => write!(f, "stale-up"),
            GhostKind::StaleDown => write!(f, "stale-down"),
            GhostKind::SilentDegrade => write!(f, "silent-degrade"),
        }
    }
}

/// One interval of belief/actual divergence. `t_end` is `None` while open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhostRecord {
    pub observer: ObserverId,
    pub link: LinkId,
    pub kind: GhostKind,
    pub t_start: SimTime,
    pub t_end: Option<SimTime>,
}

impl GhostRecord {
    /// Duration, extending open records to `horizon`. Never zero: sub-tick
    /// flaps count as one tick.
    pub fn duration(&self, horizon: SimTime) -> SimDuration {
        let end = self.t_end.unwrap_or(horizon).max(self.t_start) ;
        end.since(self.t_start).max(SimDuration::from_ticks(1))
    }
}

/// One observer's believed graph.
#[derive(Debug, Clone)]
pub struct ObserverView {
    pub observer: ObserverId,
    pub believed: Graph,
    pub last_update: BTreeMap<LinkId, SimTime>,
}

/// Aggregate ghost statistics for one observer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GhostStats {
    pub total: SimDuration,
    pub max: SimDuration,
    pub count_stale_up: u64,
    pub count_stale_down: u64,
    pub count_silent_degrade: u64,
    /// Records where the observer believed a healthy link dead (= stale-down).
    pub false_positives: u64,
}

/// Tracks actual topology, per-observer beliefs, and the ghost ledger.
#[derive(Debug, Clone)]
pub struct TopologyTracker {
    actual: Graph,
    views: BTreeMap<ObserverId, ObserverView>,
    open: BTreeMap<(ObserverId, LinkId), GhostRecord>,
    // Latest closed-record end per (observer, link); keeps the 1-tick bump
    // for sub-tick flaps from producing overlapping records.
    last_end: BTreeMap<(ObserverId, LinkId), SimTime>,
    closed: Vec<GhostRecord>,
}

impl TopologyTracker {
    /// All observers start believing the actual initial state.
    pub fn new(actual: Graph, observers: impl IntoIterator<Item = ObserverId>) -> Self {
        let views = observers
            .into_iter()
            .map(|o| {
                (
                    o,
                    ObserverView {
                        observer: o,
                        believed: actual.clone(),
                        last_update: BTreeMap::new(),
                    },
                )
            })
            .collect();
        TopologyTracker {
            actual,
            views,
            open: BTreeMap::new(),
            last_end: BTreeMap::new(),
            closed: Vec::new(),
        }
    }

    pub fn actual(&self) -> &Graph {
        &self.actual
    }

    pub fn view(&self, observer: ObserverId) -> Result<&ObserverView> {
        self.views
            .get(&observer)
            .ok_or_else(|| Error::invariant(format!("unknown observer {observer}")))
    }

    pub fn observers(&self) -> impl Iterator<Item = ObserverId> + '_ {
        self.views.keys().copied()
    }

    /// Update the actual up/down state of a link. Downing a link resets its
    /// bandwidth factor: a dead link has no rate to be stale about.
    pub fn set_actual(&mut self, link: LinkId, up: bool, t: SimTime) -> Result<()> {
        let l = self.actual.link_mut(link)?;
        l.state = if up { LinkState::UP } else { LinkState::DOWN };
        self.refresh_link(link, t);
        Ok(())
    }

    /// Silently degrade an up link to `factor` of its rate. No detector-visible
    /// transition happens; only an explicit status poll can observe this.
    pub fn set_actual_bandwidth(&mut self, link: LinkId, factor: f64, t: SimTime) -> Result<()> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::config(format!(
                "bandwidth factor must be in (0, 1], got {factor}"
            )));
        }
        let l = self.actual.link_mut(link)?;
        if !l.state.up {
            return Err(Error::config(format!(
                "cannot degrade {link}: link is down"
            )));
        }
        l.state.bandwidth_factor = factor;
        self.refresh_link(link, t);
        Ok(())
    }

    /// Update one observer's belief about a link's up/down state.
    pub fn set_belief(&mut self, observer: ObserverId, link: LinkId, up: bool, t: SimTime) -> Result<()> {
        let view = self
            .views
            .get_mut(&observer)
            .ok_or_else(|| Error::invariant(format!("unknown observer {observer}")))?;
        let l = view.believed.link_mut(link)?;
        l.state = if up { LinkState::UP } else { LinkState::DOWN };
        view.last_update.insert(link, t);
        self.refresh_one(observer, link, t);
        Ok(())
    }

    /// Update one observer's believed bandwidth factor (a status-poll result).
    pub fn set_belief_bandwidth(
        &mut self,
        observer: ObserverId,
        link: LinkId,
        factor: f64,
        t: SimTime,
    ) -> Result<()> {
        let view = self
            .views
            .get_mut(&observer)
            .ok_or_else(|| Error::invariant(format!("unknown observer {observer}")))?;
        let l = view.believed.link_mut(link)?;
        l.state.bandwidth_factor = factor;
        view.last_update.insert(link, t);
        self.refresh_one(observer, link, t);
        Ok(())
    }

    pub fn actual_link_state(&self, link: LinkId) -> Result<LinkState> {
        Ok(self.actual.link(link)?.state)
    }

    pub fn believed_link_state(&self, observer: ObserverId, link: LinkId) -> Result<LinkState> {
        Ok(self.view(observer)?.believed.link(link)?.state)
    }

    fn refresh_link(&mut self, link: LinkId, t: SimTime) {
        let observers: Vec<ObserverId> = self.views.keys().copied().collect();
        for obs in observers {
            self.refresh_one(obs, link, t);
        }
    }

    fn refresh_one(&mut self, observer: ObserverId, link: LinkId, t: SimTime) {
        let actual = self.actual.link(link).expect("link in actual graph").state;
        let believed = self.views[&observer]
            .believed
            .link(link)
            .expect("belief graphs share the identifier universe")
            .state;
        let kind = classify(believed, actual);
        let key = (observer, link);
        let open_kind = self.open.get(&key).map(|r| r.kind);
        if open_kind == kind {
            return; // no change in divergence class
        }
        if let Some(mut rec) = self.open.remove(&key) {
            // Sub-tick flap: force a 1-tick footprint.
            let end = t.max(rec.t_start + SimDuration::from_ticks(1));
            rec.t_end = Some(end);
            self.last_end.insert(key, end);
            self.closed.push(rec);
        }
        if let Some(kind) = kind {
            let floor = self.last_end.get(&key).copied().unwrap_or(SimTime::ZERO);
            self.open.insert(
                key,
                GhostRecord {
                    observer,
                    link,
                    kind,
                    t_start: t.max(floor),
                    t_end: None,
                },
            );
        }
    }

    /// All records: closed ones plus still-open ones (t_end = None), ordered
    /// by (observer, link, start).
    pub fn records(&self) -> Vec<GhostRecord> {
        let mut all = self.closed.clone();
        all.extend(self.open.values().copied());
        all.sort_by_key(|r| (r.observer, r.link, r.t_start.ticks()));
        all
    }

    /// Aggregate per-observer statistics; open records extend to `horizon`.
    pub fn ghost_stats(&self, horizon: SimTime) -> BTreeMap<ObserverId, GhostStats> {
        let mut stats: BTreeMap<ObserverId, GhostStats> = self
            .views
            .keys()
            .map(|&o| (o, GhostStats::default()))
            .collect();
        for rec in self.records() {
            let s = stats.entry(rec.observer).or_default();
            let d = rec.duration(horizon);
            s.total += d;
            s.max = s.max.max(d);
            match rec.kind {
                GhostKind::StaleUp => s.count_stale_up += 1,
                GhostKind::StaleDown => {
                    s.count_stale_down += 1;
                    s.false_positives += 1;
                }
                GhostKind::SilentDegrade => s.count_silent_degrade += 1,
            }
        }
        stats
    }
}

/// Divergence class for one (believed, actual) attribute pair.
///
/// Up/down disagreement dominates; bandwidth disagreement only counts while
/// both sides agree the link is up.
pub fn classify(believed: LinkState, actual: LinkState) -> Option<GhostKind> {
    match (believed.up, actual.up) {
        (true, false) => Some(GhostKind::StaleUp),
        (false, true) => Some(GhostKind::StaleDown),
        (false, false) => None,
        (true, true) => {
            if believed.bandwidth_factor != actual.bandwidth_factor {
                Some(GhostKind::SilentDegrade)
            } else {
                None
            }
        }
    }
}

/// Write ghost records as CSV: `observer,link,kind,t_start,t_end`.
/// Times are clock ticks; open records get the horizon as their end.
pub fn write_ghost_csv<W: std::io::Write>(
    records: &[GhostRecord],
    horizon: SimTime,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["observer", "link", "kind", "t_start", "t_end"])?;
    for r in records {
        let end = r.t_start + r.duration(horizon);
        w.write_record([
            r.observer.to_string(),
            r.link.to_string(),
            r.kind.to_string(),
            r.t_start.ticks().to_string(),
            end.ticks().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_tracker() -> (TopologyTracker, LinkId, ObserverId) {
        let (g, l) = Graph::pair();
        let obs = ObserverId::Node(NodeId(0));
        (TopologyTracker::new(g, [obs]), l, obs)
    }

    #[test]
    fn stale_up_opens_and_closes() {
        let (mut t, l, obs) = pair_tracker();
        t.set_actual(l, false, SimTime::from_ticks(10)).unwrap();
        t.set_belief(obs, l, false, SimTime::from_ticks(25)).unwrap();
        let recs = t.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kind, GhostKind::StaleUp);
        assert_eq!(recs[0].t_start, SimTime::from_ticks(10));
        assert_eq!(recs[0].t_end, Some(SimTime::from_ticks(25)));
    }

    #[test]
    fn false_positive_opens_stale_down() {
        let (mut t, l, obs) = pair_tracker();
        t.set_belief(obs, l, false, SimTime::from_ticks(5)).unwrap();
        let recs = t.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].kind, GhostKind::StaleDown);
        assert_eq!(recs[0].t_end, None);
        let stats = t.ghost_stats(SimTime::from_ticks(100));
        assert_eq!(stats[&obs].false_positives, 1);
        assert_eq!(stats[&obs].total, SimDuration::from_ticks(95));
    }

    #[test]
    fn redundant_update_changes_nothing() {
        let (mut t, l, obs) = pair_tracker();
        t.set_belief(obs, l, true, SimTime::from_ticks(5)).unwrap();
        t.set_actual(l, true, SimTime::from_ticks(6)).unwrap();
        assert!(t.records().is_empty());
    }

    #[test]
    fn sub_tick_flap_records_one_tick() {
        let (mut t, l, _) = pair_tracker();
        let at = SimTime::from_ticks(50);
        t.set_actual(l, false, at).unwrap();
        t.set_actual(l, true, at).unwrap();
        let recs = t.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t_start, at);
        assert_eq!(recs[0].t_end, Some(SimTime::from_ticks(51)));
        assert_eq!(recs[0].duration(SimTime::from_ticks(100)), SimDuration::from_ticks(1));
    }

    #[test]
    fn degrade_opens_silent_ghost_and_poll_closes_it() {
        let (mut t, l, obs) = pair_tracker();
        t.set_actual_bandwidth(l, 1.0 / 12.8, SimTime::from_ticks(100)).unwrap();
        assert_eq!(t.records()[0].kind, GhostKind::SilentDegrade);
        t.set_belief_bandwidth(obs, l, 1.0 / 12.8, SimTime::from_ticks(180)).unwrap();
        let recs = t.records();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t_end, Some(SimTime::from_ticks(180)));
    }

    #[test]
    fn degrade_factor_one_is_a_noop() {
        let (mut t, l, _) = pair_tracker();
        t.set_actual_bandwidth(l, 1.0, SimTime::from_ticks(10)).unwrap();
        assert!(t.records().is_empty());
    }

    #[test]
    fn degrade_rejected_on_down_link() {
        let (mut t, l, _) = pair_tracker();
        t.set_actual(l, false, SimTime::from_ticks(1)).unwrap();
        assert!(t.set_actual_bandwidth(l, 0.5, SimTime::from_ticks(2)).is_err());
    }

    #[test]
    fn down_transition_dominates_stale_rate() {
        let (mut t, l, obs) = pair_tracker();
        // Degrade, then the link dies before the observer ever polls.
        t.set_actual_bandwidth(l, 0.5, SimTime::from_ticks(10)).unwrap();
        t.set_actual(l, false, SimTime::from_ticks(20)).unwrap();
        let recs = t.records();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].kind, GhostKind::SilentDegrade);
        assert_eq!(recs[0].t_end, Some(SimTime::from_ticks(20)));
        assert_eq!(recs[1].kind, GhostKind::StaleUp);
        assert_eq!(recs[1].t_end, None);
        let _ = obs;
    }

    #[test]
    fn unknown_link_is_fatal() {
        let (mut t, _, _) = pair_tracker();
        assert!(t.set_actual(LinkId(99), false, SimTime::ZERO).is_err());
    }

    #[test]
    fn per_observer_views_are_independent() {
        let (g, l) = Graph::pair();
        let o1 = ObserverId::Node(NodeId(0));
        let o2 = ObserverId::Controller;
        let mut t = TopologyTracker::new(g, [o1, o2]);
        t.set_actual(l, false, SimTime::from_ticks(10)).unwrap();
        t.set_belief(o1, l, false, SimTime::from_ticks(15)).unwrap();
        // o2 still believes up: its ghost stays open.
        let stats = t.ghost_stats(SimTime::from_ticks(100));
        assert_eq!(stats[&o1].total, SimDuration::from_ticks(5));
        assert_eq!(stats[&o2].total, SimDuration::from_ticks(90));
    }

    #[test]
    fn no_faults_no_ghosts() {
        let (t, _, obs) = pair_tracker();
        let stats = t.ghost_stats(SimTime::from_secs(1));
        assert_eq!(stats[&obs], GhostStats::default());
    }
}
