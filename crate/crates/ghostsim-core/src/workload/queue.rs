//! Retry amplification in a bounded FIFO service queue.
//!
//! The model is deliberately stark: Poisson arrivals, deterministic service
//! times (the M/D/1 shape keeps the overload threshold sharp), a bounded
//! waiting queue, and clients that give up after a fixed patience and retry.
//! Two modeling choices carry all the interesting dynamics:
//!
//! - **The server cannot see abandonment.** A request whose client already
//!   gave up stays in the queue and is served anyway; that service is wasted
//!   work. This is what lets a backlog of stale requests pin goodput at zero
//!   even after capacity recovers.
//! - **Drops are invisible to clients.** A request rejected at a full queue
//!   looks exactly like a slow one; the client waits out its patience and
//!   retries. Each timed-out attempt adds a fresh arrival, so offered load
//!   inflates by the timeout fraction — the fixed point λ_eff = λ·(1 + P_timeout).
//!
//! Under sustained overload P_timeout → 1, so a single-retry policy doubles
//! the load and an unbounded policy grows it without limit: the retry storm
//! then persists after the trigger clears (a metastable state). Shedding
//! retries breaks the loop: a shed retry terminates its whole retry chain,
//! capping amplification at 1/(drop fraction).
//!
//! Accounting is by client-visible attempt fate: every injected attempt is
//! eventually counted exactly once as completed-in-time or abandoned, so
//! `offered + retries = in-time + abandoned + still-undecided` holds exactly
//! at every bucket boundary. Late completions (wasted server work) are
//! tracked separately and are not a fate.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{ComponentId, Engine};
use crate::rng::{RngStream, SeedDomain};
use crate::time::{SimDuration, SimTime};

/// Capacity multiplier applied during `[from, until)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityTrigger {
    pub factor: f64,
    pub from: SimTime,
    pub until: SimTime,
}

/// From `from` onward, each retry spawn is dropped with probability
/// `drop_fraction`; a dropped retry ends its chain for good.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryShed {
    pub from: SimTime,
    pub drop_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadConfig {
    /// Rate of original (non-retry) arrivals.
    pub offered_qps: f64,
    /// Service rate at full capacity; service time is exactly its inverse.
    pub capacity_qps: f64,
    /// Waiting-room bound, excluding the request in service.
    pub queue_limit: usize,
    /// How long a client waits for one attempt before giving up.
    pub patience: SimDuration,
    /// Retries allowed per original request; `None` means retry forever.
    pub max_retries: Option<u32>,
    /// Delay between giving up and retrying; zero retries immediately.
    pub retry_backoff: SimDuration,
    pub trigger: Option<CapacityTrigger>,
    pub shed: Option<RetryShed>,
    pub horizon: SimDuration,
    /// Time-series resolution.
    pub bucket: SimDuration,
}

impl WorkloadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.offered_qps > 0.0) || !self.offered_qps.is_finite() {
            return Err(Error::config("offered_qps must be finite and > 0"));
        }
        if !(self.capacity_qps > 0.0) || !self.capacity_qps.is_finite() {
            return Err(Error::config("capacity_qps must be finite and > 0"));
        }
        if self.queue_limit < 1 {
            return Err(Error::config("queue_limit must be >= 1"));
        }
        if self.patience.is_zero() {
            return Err(Error::config("patience must be > 0"));
        }
        if self.horizon.is_zero() || self.bucket.is_zero() {
            return Err(Error::config("horizon and bucket must be > 0"));
        }
        if self.bucket > self.horizon {
            return Err(Error::config("bucket must not exceed the horizon"));
        }
        if let Some(t) = &self.trigger {
            if !(t.factor > 0.0) || !t.factor.is_finite() {
                return Err(Error::config("trigger factor must be finite and > 0"));
            }
            if t.from >= t.until {
                return Err(Error::config("trigger window must satisfy from < until"));
            }
        }
        if let Some(s) = &self.shed {
            if !(0.0..=1.0).contains(&s.drop_fraction) {
                return Err(Error::config("shed drop_fraction must be in [0, 1]"));
            }
        }
        Ok(())
    }

    fn capacity_factor(&self, t: SimTime) -> f64 {
        match &self.trigger {
            Some(tr) if t >= tr.from && t < tr.until => tr.factor,
            _ => 1.0,
        }
    }

    fn buckets(&self) -> usize {
        self.horizon.ticks().div_ceil(self.bucket.ticks()) as usize
    }
}

/// Per-bucket counters. All counts are events inside
/// `[i*bucket, (i+1)*bucket)`; depth and undecided are snapshots at each
/// bucket's end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSeries {
    pub bucket: SimDuration,
    pub offered: Vec<u64>,
    pub retries: Vec<u64>,
    pub completed_in_time: Vec<u64>,
    pub completed_late: Vec<u64>,
    pub abandoned: Vec<u64>,
    pub door_drops: Vec<u64>,
    pub shed_killed: Vec<u64>,
    pub queue_depth: Vec<u64>,
    pub undecided: Vec<u64>,
}

impl WorkloadSeries {
    pub fn len(&self) -> usize {
        self.offered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offered.is_empty()
    }

    /// Originals plus retries injected in bucket `b`.
    pub fn effective(&self, b: usize) -> u64 {
        self.offered[b] + self.retries[b]
    }

    pub fn goodput_qps(&self, b: usize) -> f64 {
        self.completed_in_time[b] as f64 / self.bucket.as_secs_f64()
    }

    pub fn bucket_start(&self, b: usize) -> SimTime {
        SimTime::from_ticks(self.bucket.ticks() * b as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadTotals {
    pub offered: u64,
    pub retries: u64,
    pub completed_in_time: u64,
    pub completed_late: u64,
    pub abandoned: u64,
    pub door_drops: u64,
    pub shed_killed: u64,
    pub undecided_at_end: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadReport {
    pub series: WorkloadSeries,
    pub totals: WorkloadTotals,
    /// Digest of the processed event trace; equal digests mean bit-identical
    /// runs.
    pub trace_hash: u64,
}

impl WorkloadReport {
    /// Every attempt fate accounted for exactly once.
    pub fn conservation_holds(&self) -> bool {
        let t = &self.totals;
        t.offered + t.retries == t.completed_in_time + t.abandoned + t.undecided_at_end
    }
}

#[derive(Debug, Clone)]
enum WlEvent {
    /// Exogenous original arrival; schedules its successor.
    Arrival,
    /// A retry entering the system.
    Inject { attempt_no: u32 },
    Deadline { attempt: u64 },
    ServiceDone { attempt: u64 },
    Sample { idx: usize },
}

const SERVER: ComponentId = ComponentId(0);

struct World {
    cfg: WorkloadConfig,
    arrivals: RngStream,
    shed_rng: RngStream,
    queue: VecDeque<u64>,
    busy: bool,
    /// Attempts injected but not yet completed-in-time or abandoned, keyed by
    /// attempt id, holding the attempt number within its retry chain.
    undecided: BTreeMap<u64, u32>,
    next_attempt: u64,
    series: WorkloadSeries,
    mean_gap: SimDuration,
}

impl World {
    fn bucket_idx(&self, t: SimTime) -> usize {
        ((t.ticks() / self.cfg.bucket.ticks()) as usize).min(self.series.len() - 1)
    }

    fn start_service(&mut self, eng: &mut Engine<WlEvent>, now: SimTime, attempt: u64) -> Result<()> {
        self.busy = true;
        let rate = self.cfg.capacity_qps * self.cfg.capacity_factor(now);
        let service = SimDuration::from_secs_f64(1.0 / rate);
        eng.schedule(now + service, SERVER, WlEvent::ServiceDone { attempt })?;
        Ok(())
    }

    fn inject(&mut self, eng: &mut Engine<WlEvent>, now: SimTime, attempt_no: u32) -> Result<()> {
        let id = self.next_attempt;
        self.next_attempt += 1;
        let b = self.bucket_idx(now);
        if attempt_no == 0 {
            self.series.offered[b] += 1;
        } else {
            self.series.retries[b] += 1;
        }
        self.undecided.insert(id, attempt_no);
        eng.schedule(now + self.cfg.patience, SERVER, WlEvent::Deadline { attempt: id })?;

        if !self.busy {
            self.start_service(eng, now, id)?;
        } else if self.queue.len() < self.cfg.queue_limit {
            self.queue.push_back(id);
        } else {
            // Full house: the attempt vanishes server-side. The client can't
            // tell and will time out like any other.
            self.series.door_drops[b] += 1;
        }
        Ok(())
    }

    fn handle(&mut self, eng: &mut Engine<WlEvent>, now: SimTime, ev: WlEvent) -> Result<()> {
        match ev {
            WlEvent::Arrival => {
                self.inject(eng, now, 0)?;
                let gap = self.arrivals.exp_duration(self.mean_gap)?;
                eng.schedule(now + gap, SERVER, WlEvent::Arrival)?;
            }
            WlEvent::Inject { attempt_no } => {
                self.inject(eng, now, attempt_no)?;
            }
            WlEvent::Deadline { attempt } => {
                let Some(attempt_no) = self.undecided.remove(&attempt) else {
                    return Ok(()); // completed in time; nothing to abandon
                };
                let b = self.bucket_idx(now);
                self.series.abandoned[b] += 1;
                let retries_left = self.cfg.max_retries.map_or(true, |m| attempt_no < m);
                if !retries_left {
                    return Ok(());
                }
                let shed_now = self
                    .cfg
                    .shed
                    .as_ref()
                    .is_some_and(|s| now >= s.from && self.shed_rng.chance(s.drop_fraction));
                if shed_now {
                    self.series.shed_killed[b] += 1;
                } else {
                    let at = now + self.cfg.retry_backoff;
                    eng.schedule(at, SERVER, WlEvent::Inject { attempt_no: attempt_no + 1 })?;
                }
            }
            WlEvent::ServiceDone { attempt } => {
                let b = self.bucket_idx(now);
                if self.undecided.remove(&attempt).is_some() {
                    self.series.completed_in_time[b] += 1;
                } else {
                    // The client already gave up; this work served nobody.
                    self.series.completed_late[b] += 1;
                }
                self.busy = false;
                if let Some(next) = self.queue.pop_front() {
                    self.start_service(eng, now, next)?;
                }
            }
            WlEvent::Sample { idx } => {
                self.series.queue_depth[idx] = self.queue.len() as u64;
                self.series.undecided[idx] = self.undecided.len() as u64;
            }
        }
        Ok(())
    }
}

/// Run the queue under the configured trigger and retry policy.
pub fn run_retry_storm(cfg: &WorkloadConfig, domain: &SeedDomain) -> Result<WorkloadReport> {
    cfg.validate()?;
    let n = cfg.buckets();
    let series = WorkloadSeries {
        bucket: cfg.bucket,
        offered: vec![0; n],
        retries: vec![0; n],
        completed_in_time: vec![0; n],
        completed_late: vec![0; n],
        abandoned: vec![0; n],
        door_drops: vec![0; n],
        shed_killed: vec![0; n],
        queue_depth: vec![0; n],
        undecided: vec![0; n],
    };
    let mut world = World {
        arrivals: domain.stream("workload.arrivals"),
        shed_rng: domain.stream("workload.shed"),
        queue: VecDeque::new(),
        busy: false,
        undecided: BTreeMap::new(),
        next_attempt: 0,
        series,
        mean_gap: SimDuration::from_secs_f64(1.0 / cfg.offered_qps),
        cfg: cfg.clone(),
    };

    let horizon = SimTime::ZERO + cfg.horizon;
    let mut eng: Engine<WlEvent> = Engine::new().with_trace();
    // Bucket-end samples go in first: at a boundary instant they fire ahead
    // of any same-instant activity, so each snapshot is exactly the state at
    // the end of its bucket.
    for idx in 0..n {
        let at = SimTime::ZERO + cfg.bucket * (idx as u64 + 1);
        eng.schedule(at.min(horizon), SERVER, WlEvent::Sample { idx })?;
    }
    let first_gap = world.arrivals.exp_duration(world.mean_gap)?;
    eng.schedule(SimTime::ZERO + first_gap, SERVER, WlEvent::Arrival)?;

    eng.run_until(horizon, |eng, ev| {
        let now = ev.fire_at;
        world.handle(eng, now, ev.payload)
    })?;

    let sum = |v: &Vec<u64>| v.iter().sum::<u64>();
    let totals = WorkloadTotals {
        offered: sum(&world.series.offered),
        retries: sum(&world.series.retries),
        completed_in_time: sum(&world.series.completed_in_time),
        completed_late: sum(&world.series.completed_late),
        abandoned: sum(&world.series.abandoned),
        door_drops: sum(&world.series.door_drops),
        shed_killed: sum(&world.series.shed_killed),
        undecided_at_end: world.undecided.len() as u64,
    };
    let report = WorkloadReport {
        series: world.series,
        totals,
        trace_hash: eng.trace_hash().expect("tracing enabled"),
    };
    if !report.conservation_holds() {
        return Err(Error::invariant(format!(
            "attempt accounting leak: {:?}",
            report.totals
        )));
    }
    Ok(report)
}

/// Write the time series as CSV, one row per bucket. Times are clock ticks.
pub fn write_workload_csv<W: std::io::Write>(series: &WorkloadSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "bucket_start",
        "offered",
        "retries",
        "completed_in_time",
        "completed_late",
        "abandoned",
        "door_drops",
        "shed_killed",
        "queue_depth",
        "undecided",
    ])?;
    for b in 0..series.len() {
        w.write_record([
            series.bucket_start(b).ticks().to_string(),
            series.offered[b].to_string(),
            series.retries[b].to_string(),
            series.completed_in_time[b].to_string(),
            series.completed_late[b].to_string(),
            series.abandoned[b].to_string(),
            series.door_drops[b].to_string(),
            series.shed_killed[b].to_string(),
            series.queue_depth[b].to_string(),
            series.undecided[b].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of a trigger-and-recovery experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HysteresisOutcome {
    /// Goodput came back to >= 90% of nominal for a sustained window.
    pub recovered: bool,
    /// Start of the first recovered window.
    pub recovered_at: Option<SimTime>,
    /// Total time from trigger onset with goodput below 50% of nominal.
    pub degraded_dwell: SimDuration,
    pub nominal_qps: f64,
    pub report: WorkloadReport,
}

/// Buckets a recovery window must span: one good bucket is noise, ten is a
/// regime.
const RECOVERY_WINDOW: usize = 10;

/// Run the scenario and judge recovery. Nominal goodput is the offered rate
/// (the baseline must be provisioned with headroom, or there is nothing to
/// recover to). Recovery means a `RECOVERY_WINDOW`-bucket mean goodput of at
/// least 90% of nominal, starting at or after the trigger onset.
pub fn hysteresis_experiment(cfg: &WorkloadConfig, domain: &SeedDomain) -> Result<HysteresisOutcome> {
    let report = run_retry_storm(cfg, domain)?;
    let nominal = cfg.offered_qps;
    let Some(trigger) = &cfg.trigger else {
        return Ok(HysteresisOutcome {
            recovered: true,
            recovered_at: None,
            degraded_dwell: SimDuration::ZERO,
            nominal_qps: nominal,
            report,
        });
    };

    let s = &report.series;
    let n = s.len();
    let from_bucket = (trigger.from.ticks() / cfg.bucket.ticks()) as usize;

    let mut recovered_at = None;
    for i in from_bucket..n.saturating_sub(RECOVERY_WINDOW - 1) {
        let window: u64 = (i..i + RECOVERY_WINDOW).map(|b| s.completed_in_time[b]).sum();
        let mean_qps = window as f64 / (RECOVERY_WINDOW as f64 * cfg.bucket.as_secs_f64());
        if mean_qps >= 0.9 * nominal {
            recovered_at = Some(s.bucket_start(i));
            break;
        }
    }

    let mut dwell = SimDuration::ZERO;
    for b in from_bucket..n {
        if s.goodput_qps(b) < 0.5 * nominal {
            dwell += cfg.bucket;
        }
    }

    Ok(HysteresisOutcome {
        recovered: recovered_at.is_some(),
        recovered_at,
        degraded_dwell: dwell,
        nominal_qps: nominal,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_cfg() -> WorkloadConfig {
        WorkloadConfig {
            offered_qps: 50.0,
            capacity_qps: 100.0,
            queue_limit: 1_000,
            patience: SimDuration::from_secs(5),
            max_retries: None,
            retry_backoff: SimDuration::ZERO,
            trigger: None,
            shed: None,
            horizon: SimDuration::from_secs(60),
            bucket: SimDuration::from_secs(1),
        }
    }

    #[test]
    fn config_validation_catches_nonsense() {
        let mut c = base_cfg();
        c.offered_qps = 0.0;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = base_cfg();
        c.queue_limit = 0;
        assert!(c.validate().unwrap_err().is_config());
        let mut c = base_cfg();
        c.trigger = Some(CapacityTrigger {
            factor: 0.5,
            from: SimTime::from_secs(10),
            until: SimTime::from_secs(10),
        });
        assert!(c.validate().unwrap_err().is_config());
        let mut c = base_cfg();
        c.shed = Some(RetryShed { from: SimTime::ZERO, drop_fraction: 1.5 });
        assert!(c.validate().unwrap_err().is_config());
    }

    #[test]
    fn headroom_and_patience_mean_no_retries_at_all() {
        let cfg = base_cfg();
        let report = run_retry_storm(&cfg, &SeedDomain::new(11)).unwrap();
        assert_eq!(report.totals.retries, 0);
        assert_eq!(report.totals.abandoned, 0);
        assert_eq!(report.totals.door_drops, 0);
        assert_eq!(report.totals.completed_late, 0);
        // Everything injected either finished in time or is mid-flight.
        assert_eq!(
            report.totals.completed_in_time + report.totals.undecided_at_end,
            report.totals.offered
        );
        // ~50 QPS over 60 s.
        assert!(report.totals.offered > 2_500 && report.totals.offered < 3_500);
    }

    #[test]
    fn attempt_accounting_balances_in_every_bucket() {
        let cfg = WorkloadConfig {
            offered_qps: 12.0,
            capacity_qps: 30.0,
            queue_limit: 120,
            patience: SimDuration::from_secs(1),
            trigger: Some(CapacityTrigger {
                factor: 0.3,
                from: SimTime::from_secs(10),
                until: SimTime::from_secs(40),
            }),
            horizon: SimDuration::from_secs(60),
            ..base_cfg()
        };
        let report = run_retry_storm(&cfg, &SeedDomain::new(3)).unwrap();
        assert!(report.conservation_holds());
        let s = &report.series;
        let mut prev_undecided = 0i64;
        for b in 0..s.len() {
            let injected = (s.offered[b] + s.retries[b]) as i64;
            let resolved = (s.completed_in_time[b] + s.abandoned[b]) as i64;
            let delta = s.undecided[b] as i64 - prev_undecided;
            assert_eq!(injected, resolved + delta, "bucket {b}");
            prev_undecided = s.undecided[b] as i64;
        }
        // The storm actually happened.
        assert!(report.totals.retries > 0);
        assert!(report.totals.door_drops > 0);
    }

    /// Sustained overload with a single immediate retry settles at effective
    /// load ≈ 2× offered: essentially every attempt times out, so each
    /// original is matched by one retry.
    #[test]
    fn single_retry_overload_doubles_effective_load() {
        let cfg = WorkloadConfig {
            offered_qps: 300.0,
            capacity_qps: 300.0,
            queue_limit: 1_000,
            patience: SimDuration::from_millis(250),
            max_retries: Some(1),
            trigger: Some(CapacityTrigger {
                factor: 250.0 / 300.0,
                from: SimTime::from_secs(20),
                until: SimTime::from_secs(160),
            }),
            horizon: SimDuration::from_secs(160),
            ..base_cfg()
        };
        let report = run_retry_storm(&cfg, &SeedDomain::new(5)).unwrap();
        let s = &report.series;
        let window = 100..160usize;
        let offered: u64 = window.clone().map(|b| s.offered[b]).sum();
        let retries: u64 = window.clone().map(|b| s.retries[b]).sum();
        let in_time: u64 = window.clone().map(|b| s.completed_in_time[b]).sum();
        let ratio = (offered + retries) as f64 / offered as f64;
        assert!(
            (1.85..=2.05).contains(&ratio),
            "effective/offered = {ratio} (offered {offered}, retries {retries})"
        );
        // Retry flow mirrors the original flow, and goodput is gone: the
        // fixed point λ_eff = λ(1 + P_timeout) with P_timeout ≈ 1.
        assert!((retries as f64 / offered as f64 - 1.0).abs() < 0.1);
        assert!((in_time as f64) < 0.02 * offered as f64, "goodput should collapse");
    }

    #[test]
    fn aggressive_retries_amplify_load_past_10x() {
        let cfg = WorkloadConfig {
            offered_qps: 20.0,
            capacity_qps: 30.0,
            queue_limit: 150,
            patience: SimDuration::from_millis(500),
            max_retries: Some(100),
            trigger: Some(CapacityTrigger {
                factor: 1.0 / 3.0,
                from: SimTime::from_secs(10),
                until: SimTime::from_secs(60),
            }),
            horizon: SimDuration::from_secs(60),
            ..base_cfg()
        };
        let report = run_retry_storm(&cfg, &SeedDomain::new(17)).unwrap();
        let s = &report.series;
        let peak = (0..s.len())
            .map(|b| s.effective(b) as f64 / s.offered[b].max(1) as f64)
            .fold(0.0f64, f64::max);
        assert!(peak >= 10.0, "peak amplification {peak}");
    }

    #[test]
    fn no_trigger_is_trivially_recovered() {
        let out = hysteresis_experiment(&base_cfg(), &SeedDomain::new(2)).unwrap();
        assert!(out.recovered);
        assert_eq!(out.recovered_at, None);
        assert_eq!(out.degraded_dwell, SimDuration::ZERO);
    }

    /// Unbounded immediate retries: the backlog of already-abandoned work
    /// plus the retry flood keep goodput at zero long after capacity is
    /// restored.
    #[test]
    fn retry_storm_outlives_its_trigger() {
        let cfg = WorkloadConfig {
            offered_qps: 12.0,
            capacity_qps: 30.0,
            queue_limit: 120,
            patience: SimDuration::from_secs(1),
            trigger: Some(CapacityTrigger {
                factor: 0.3,
                from: SimTime::from_secs(30),
                until: SimTime::from_secs(60),
            }),
            horizon: SimDuration::from_secs(200),
            ..base_cfg()
        };
        let out = hysteresis_experiment(&cfg, &SeedDomain::new(7)).unwrap();
        assert!(!out.recovered, "storm must not die on its own");
        // Goodput stays under 50% of nominal from trigger onset to the end.
        assert!(
            out.degraded_dwell >= SimDuration::from_secs(165),
            "dwell {}",
            out.degraded_dwell
        );
        let s = &out.report.series;
        for b in 60..s.len() {
            assert!(
                s.goodput_qps(b) < 6.0,
                "bucket {b}: goodput {} after trigger removal",
                s.goodput_qps(b)
            );
        }
    }

    /// Same storm, but retries are shed at 50% from t = 90 s: every shed
    /// retry kills its chain, amplification drops to 2× < capacity margin,
    /// the backlog drains, and goodput returns.
    #[test]
    fn shedding_retries_breaks_the_storm() {
        let cfg = WorkloadConfig {
            offered_qps: 12.0,
            capacity_qps: 30.0,
            queue_limit: 120,
            patience: SimDuration::from_secs(1),
            trigger: Some(CapacityTrigger {
                factor: 0.3,
                from: SimTime::from_secs(30),
                until: SimTime::from_secs(60),
            }),
            shed: Some(RetryShed { from: SimTime::from_secs(90), drop_fraction: 0.5 }),
            horizon: SimDuration::from_secs(250),
            ..base_cfg()
        };
        let out = hysteresis_experiment(&cfg, &SeedDomain::new(7)).unwrap();
        assert!(out.recovered, "shedding must break the loop");
        let t = out.recovered_at.unwrap();
        assert!(t >= SimTime::from_secs(90), "recovery cannot predate shedding, got {t}");
        assert!(t <= SimTime::from_secs(200), "recovery should be prompt, got {t}");
        assert!(out.report.totals.shed_killed > 0);
        // Once recovered, it stays recovered.
        let s = &out.report.series;
        let tail: u64 = (230..250).map(|b| s.completed_in_time[b]).sum();
        assert!(tail as f64 / 20.0 >= 0.9 * 12.0, "tail goodput {}", tail as f64 / 20.0);
    }

    #[test]
    fn backoff_policy_spaces_the_retries_out() {
        let cfg = WorkloadConfig {
            offered_qps: 20.0,
            capacity_qps: 30.0,
            queue_limit: 100,
            patience: SimDuration::from_millis(500),
            max_retries: Some(3),
            retry_backoff: SimDuration::from_millis(200),
            trigger: Some(CapacityTrigger {
                factor: 0.25,
                from: SimTime::from_secs(5),
                until: SimTime::from_secs(25),
            }),
            horizon: SimDuration::from_secs(40),
            ..base_cfg()
        };
        let report = run_retry_storm(&cfg, &SeedDomain::new(23)).unwrap();
        assert!(report.conservation_holds());
        assert!(report.totals.retries > 0);
        // Bounded chains: at most 3 retries per original.
        assert!(report.totals.retries <= 3 * report.totals.offered);
    }

    #[test]
    fn same_seed_reproduces_the_exact_run() {
        let cfg = WorkloadConfig {
            offered_qps: 12.0,
            capacity_qps: 30.0,
            queue_limit: 120,
            patience: SimDuration::from_secs(1),
            trigger: Some(CapacityTrigger {
                factor: 0.3,
                from: SimTime::from_secs(10),
                until: SimTime::from_secs(30),
            }),
            horizon: SimDuration::from_secs(50),
            ..base_cfg()
        };
        let a = run_retry_storm(&cfg, &SeedDomain::new(99)).unwrap();
        let b = run_retry_storm(&cfg, &SeedDomain::new(99)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trace_hash, b.trace_hash);
        let c = run_retry_storm(&cfg, &SeedDomain::new(100)).unwrap();
        assert_ne!(a.trace_hash, c.trace_hash);
    }
}
