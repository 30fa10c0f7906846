//! SWIM-style membership: randomized direct probes, k indirect probes,
//! suspect-then-dead, and piggyback gossip dissemination.
//!
//! Each member runs a probe round every `period` (rounds staggered across
//! members). A round pings one random believed-live target; on silence the
//! prober asks `k_indirect` helpers to ping indirectly; total silence marks
//! the target suspect, and an unrefuted suspicion expires to dead after
//! `suspicion_timeout`. Status changes ride piggyback on later pings/acks,
//! spreading epidemically — O(log n) rounds to reach everyone.
//!
//! Simplifications, stated up front: messages have one fixed delay; there are
//! no incarnation numbers (a suspect is refuted only by direct contact with
//! the subject, which suffices because our dead members stay dead); indirect
//! probe traffic carries no gossip.

use std::collections::BTreeMap;

use crate::detectors::Status;
use crate::error::{Error, Result};
use crate::faults::LinkTimeline;
use crate::kernel::{ComponentId, Engine};
use crate::rng::RngStream;
use crate::time::{SimDuration, SimTime};
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwimConfig {
    pub members: usize,
    pub period: SimDuration,
    pub probe_timeout: SimDuration,
    pub k_indirect: usize,
    pub suspicion_timeout: SimDuration,
    pub msg_delay: SimDuration,
}

impl Default for SwimConfig {
    fn default() -> Self {
        SwimConfig {
            members: 8,
            period: SimDuration::from_secs(1),
            probe_timeout: SimDuration::from_millis(200),
            k_indirect: 3,
            suspicion_timeout: SimDuration::from_secs(2),
            msg_delay: SimDuration::from_millis(5),
        }
    }
}

impl SwimConfig {
    fn validate(&self) -> Result<()> {
        if self.members < 2 {
            return Err(Error::config("swim needs at least 2 members"));
        }
        if self.k_indirect + 2 > self.members {
            return Err(Error::config(format!(
                "k_indirect {} too large for {} members",
                self.k_indirect, self.members
            )));
        }
        if self.probe_timeout < self.msg_delay * 4 {
            return Err(Error::config(
                "probe timeout must cover the 4-hop indirect path",
            ));
        }
        Ok(())
    }
}

type Update = (NodeId, Status, SimTime);

#[derive(Debug, Clone)]
enum SwimEvent {
    Round { member: NodeId },
    PingDeliver { from: NodeId, to: NodeId, attempt: u64, updates: Vec<Update> },
    AckDeliver { to: NodeId, target: NodeId, attempt: u64, updates: Vec<Update> },
    ProbeTimeout { prober: NodeId, target: NodeId, attempt: u64 },
    IndirectRelay { prober: NodeId, target: NodeId, attempt: u64 },
    IndirectTimeout { prober: NodeId, target: NodeId, attempt: u64 },
    SuspicionExpire { holder: NodeId, target: NodeId, since: SimTime },
}

#[derive(Debug, Clone, Default)]
pub struct SwimReport {
    /// (holder, subject) -> time the holder first believed the subject dead.
    pub dead_believed_at: BTreeMap<(NodeId, NodeId), SimTime>,
    /// (holder, subject) -> time the holder first suspected the subject.
    pub suspected_at: BTreeMap<(NodeId, NodeId), SimTime>,
    pub dead_verdicts: usize,
    pub suspect_verdicts: usize,
}

impl SwimReport {
    /// Earliest dead belief about `subject` across members.
    pub fn first_dead(&self, subject: NodeId) -> Option<SimTime> {
        self.dead_believed_at
            .iter()
            .filter(|((_, s), _)| *s == subject)
            .map(|(_, &t)| t)
            .min()
    }

    /// Time at which every member of `holders` believed `subject` dead.
    pub fn full_dissemination(&self, subject: NodeId, holders: &[NodeId]) -> Option<SimTime> {
        holders
            .iter()
            .map(|&h| self.dead_believed_at.get(&(h, subject)).copied())
            .collect::<Option<Vec<_>>>()
            .map(|ts| ts.into_iter().max().unwrap())
    }

    /// True if two members ever held different views of the same subject —
    /// witnessed by their dead beliefs landing at different instants.
    pub fn weak_consistency_witnessed(&self, subject: NodeId) -> bool {
        let ts: Vec<SimTime> = self
            .dead_believed_at
            .iter()
            .filter(|((_, s), _)| *s == subject)
            .map(|(_, &t)| t)
            .collect();
        ts.len() > 1 && ts.iter().any(|&t| t != ts[0])
    }
}

struct MemberState {
    // subject -> (status, since). Own entry absent.
    view: BTreeMap<NodeId, (Status, SimTime)>,
}

fn priority(s: Status) -> u8 {
    match s {
        Status::Alive => 0,
        Status::Suspect => 1,
        Status::Dead => 2,
    }
}

pub struct SwimSim<'a> {
    config: SwimConfig,
    timelines: &'a BTreeMap<NodeId, LinkTimeline>,
    members: Vec<NodeId>,
    states: BTreeMap<NodeId, MemberState>,
    pending: BTreeMap<(NodeId, NodeId), u64>,
    next_attempt: u64,
    rng: RngStream,
    report: SwimReport,
}

impl<'a> SwimSim<'a> {
    pub fn new(
        config: SwimConfig,
        timelines: &'a BTreeMap<NodeId, LinkTimeline>,
        rng: RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let members: Vec<NodeId> = (0..config.members as u32).map(NodeId).collect();
        let states = members
            .iter()
            .map(|&m| {
                let view = members
                    .iter()
                    .filter(|&&o| o != m)
                    .map(|&o| (o, (Status::Alive, SimTime::ZERO)))
                    .collect();
                (m, MemberState { view })
            })
            .collect();
        Ok(SwimSim {
            config,
            timelines,
            members,
            states,
            pending: BTreeMap::new(),
            next_attempt: 0,
            rng,
            report: SwimReport::default(),
        })
    }

    pub fn members(&self) -> &[NodeId] {
        &self.members
    }

    fn node_up(&self, m: NodeId, t: SimTime) -> bool {
        self.timelines.get(&m).map_or(true, |tl| tl.up_at(t))
    }

    /// Gossip payload: every non-alive record the holder carries.
    fn snapshot(&self, holder: NodeId) -> Vec<Update> {
        self.states[&holder]
            .view
            .iter()
            .filter(|(_, (s, _))| *s != Status::Alive)
            .map(|(&m, &(s, since))| (m, s, since))
            .collect()
    }

    /// Merge one gossiped record; later info wins, dead is terminal.
    /// Returns the adopted status if the view changed.
    fn adopt(&mut self, holder: NodeId, update: Update, _now: SimTime) -> Option<Status> {
        let (subject, status, since) = update;
        if subject == holder {
            return None;
        }
        let cur = self.states.get_mut(&holder).unwrap().view.get_mut(&subject).unwrap();
        if cur.0 == Status::Dead {
            return None;
        }
        if (since.ticks(), priority(status)) > (cur.1.ticks(), priority(cur.0)) {
            *cur = (status, since);
            Some(status)
        } else {
            None
        }
    }

    /// First-hand contact with `subject`: overrides everything, even dead.
    fn adopt_direct_alive(&mut self, holder: NodeId, subject: NodeId, now: SimTime) {
        let cur = self.states.get_mut(&holder).unwrap().view.get_mut(&subject).unwrap();
        *cur = (Status::Alive, now);
    }

    fn record_transition(&mut self, holder: NodeId, subject: NodeId, status: Status, t: SimTime) {
        match status {
            Status::Suspect => {
                self.report.suspect_verdicts += 1;
                self.report.suspected_at.entry((holder, subject)).or_insert(t);
            }
            Status::Dead => {
                self.report.dead_verdicts += 1;
                self.report.dead_believed_at.entry((holder, subject)).or_insert(t);
            }
            Status::Alive => {}
        }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.range_usize(0, items.len())])
        }
    }

    pub fn run(mut self, horizon: SimTime) -> Result<SwimReport> {
        let mut engine: Engine<SwimEvent> = Engine::new();
        let target = ComponentId(0);
        // Stagger first rounds across the period so probes don't clump.
        let stride = SimDuration::from_ticks(
            (self.config.period.ticks() / self.members.len() as u64).max(1),
        );
        for (i, &m) in self.members.clone().iter().enumerate() {
            let first = SimTime::ZERO + stride * i as u64 + self.config.period;
            if first < horizon {
                engine.schedule(first, target, SwimEvent::Round { member: m })?;
            }
        }
        engine.run_until(horizon, |eng, ev| {
            let now = ev.fire_at;
            let sched = |eng: &mut Engine<SwimEvent>, at: SimTime, e: SwimEvent| {
                if at < horizon {
                    eng.schedule(at, target, e)?;
                }
                Ok::<(), Error>(())
            };
            match ev.payload {
                SwimEvent::Round { member } => {
                    sched(eng, now + self.config.period, SwimEvent::Round { member })?;
                    if !self.node_up(member, now) {
                        return Ok(()); // dead members don't probe
                    }
                    let candidates: Vec<NodeId> = self.states[&member]
                        .view
                        .iter()
                        .filter(|(_, (s, _))| *s != Status::Dead)
                        .map(|(&m, _)| m)
                        .collect();
                    let Some(tgt) = self.pick(&candidates) else { return Ok(()) };
                    let attempt = self.next_attempt;
                    self.next_attempt += 1;
                    self.pending.insert((member, tgt), attempt);
                    let d = self.config.msg_delay;
                    if self.node_up(tgt, now + d) {
                        let updates = self.snapshot(member);
                        sched(
                            eng,
                            now + d,
                            SwimEvent::PingDeliver { from: member, to: tgt, attempt, updates },
                        )?;
                    } else {
                        sched(
                            eng,
                            now + self.config.probe_timeout,
                            SwimEvent::ProbeTimeout { prober: member, target: tgt, attempt },
                        )?;
                    }
                }
                SwimEvent::PingDeliver { from, to, attempt, ref updates } => {
                    if !self.node_up(to, now) {
                        return Ok(());
                    }
                    for &u in updates {
                        if let Some(st) = self.adopt(to, u, now) {
                            self.record_transition(to, u.0, st, now);
                            if st == Status::Suspect {
                                sched(
                                    eng,
                                    now + self.config.suspicion_timeout,
                                    SwimEvent::SuspicionExpire { holder: to, target: u.0, since: u.2 },
                                )?;
                            }
                        }
                    }
                    // Being pinged is first-hand evidence the prober lives.
                    self.adopt_direct_alive(to, from, now);
                    let back = self.snapshot(to);
                    sched(
                        eng,
                        now + self.config.msg_delay,
                        SwimEvent::AckDeliver { to: from, target: to, attempt, updates: back },
                    )?;
                }
                SwimEvent::AckDeliver { to, target: subject, attempt, ref updates } => {
                    if !self.node_up(to, now) {
                        return Ok(());
                    }
                    if self.pending.get(&(to, subject)) == Some(&attempt) {
                        self.pending.remove(&(to, subject));
                    }
                    self.adopt_direct_alive(to, subject, now);
                    for &u in updates {
                        if let Some(st) = self.adopt(to, u, now) {
                            self.record_transition(to, u.0, st, now);
                            if st == Status::Suspect {
                                sched(
                                    eng,
                                    now + self.config.suspicion_timeout,
                                    SwimEvent::SuspicionExpire { holder: to, target: u.0, since: u.2 },
                                )?;
                            }
                        }
                    }
                }
                SwimEvent::ProbeTimeout { prober, target: tgt, attempt } => {
                    if self.pending.get(&(prober, tgt)) != Some(&attempt) {
                        return Ok(());
                    }
                    if !self.node_up(prober, now) {
                        return Ok(());
                    }
                    let helpers: Vec<NodeId> = self.states[&prober]
                        .view
                        .iter()
                        .filter(|(&m, (s, _))| *s == Status::Alive && m != tgt)
                        .map(|(&m, _)| m)
                        .collect();
                    let d = self.config.msg_delay;
                    let mut relayed = false;
                    for _ in 0..self.config.k_indirect.min(helpers.len()) {
                        let Some(h) = self.pick(&helpers) else { break };
                        // helper hears at +d, pings target arriving +2d, ack
                        // +3d, relay lands at +4d.
                        if !relayed
                            && self.node_up(h, now + d)
                            && self.node_up(tgt, now + d * 2)
                        {
                            relayed = true;
                            sched(
                                eng,
                                now + d * 4,
                                SwimEvent::IndirectRelay { prober, target: tgt, attempt },
                            )?;
                        }
                    }
                    if !relayed {
                        sched(
                            eng,
                            now + self.config.probe_timeout,
                            SwimEvent::IndirectTimeout { prober, target: tgt, attempt },
                        )?;
                    }
                }
                SwimEvent::IndirectRelay { prober, target: subject, attempt } => {
                    if self.pending.get(&(prober, subject)) == Some(&attempt) {
                        self.pending.remove(&(prober, subject));
                        if self.node_up(prober, now) {
                            self.adopt_direct_alive(prober, subject, now);
                        }
                    }
                }
                SwimEvent::IndirectTimeout { prober, target: subject, attempt } => {
                    if self.pending.get(&(prober, subject)) != Some(&attempt) {
                        return Ok(());
                    }
                    self.pending.remove(&(prober, subject));
                    if !self.node_up(prober, now) {
                        return Ok(());
                    }
                    if let Some(st) = self.adopt(prober, (subject, Status::Suspect, now), now) {
                        self.record_transition(prober, subject, st, now);
                        sched(
                            eng,
                            now + self.config.suspicion_timeout,
                            SwimEvent::SuspicionExpire { holder: prober, target: subject, since: now },
                        )?;
                    }
                }
                SwimEvent::SuspicionExpire { holder, target: subject, since } => {
                    if !self.node_up(holder, now) {
                        return Ok(());
                    }
                    let cur = self.states[&holder].view[&subject];
                    if cur == (Status::Suspect, since) {
                        self.states
                            .get_mut(&holder)
                            .unwrap()
                            .view
                            .insert(subject, (Status::Dead, now));
                        self.record_transition(holder, subject, Status::Dead, now);
                    }
                }
            }
            Ok(())
        })?;
        Ok(self.report)
    }
}

/// Convenience runner.
pub fn run_swim(
    config: SwimConfig,
    timelines: &BTreeMap<NodeId, LinkTimeline>,
    horizon: SimTime,
    rng: RngStream,
) -> Result<SwimReport> {
    SwimSim::new(config, timelines, rng)?.run(horizon)
}
