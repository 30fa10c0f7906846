//! Declarative scenarios: one JSON config describes a topology, a fault
//! plan, a set of observers (timeout-and-retry detectors and/or bounded-delay
//! link endpoints), and optional workload / checkpoint experiments. Running a
//! scenario yields a [`RunReport`] plus flat CSV artifacts, all byte-stable
//! for a fixed (config, seed) pair.
//!
//! # Observers
//!
//! Ghosts are accounted per observer. Observer identities are assigned
//! mechanically so they can never collide:
//!
//! - bounded-delay (triangle) endpoints observe as `n0`, `n1`, `n2` — the
//!   graph nodes themselves;
//! - detector entry `i` observes as `n{node_count + i}` — a monitoring
//!   process bolted onto the fabric — except the node-lifecycle detector,
//!   which observes as `controller` (there can be at most one);
//! - every observer starts believing the true initial state.
//!
//! # Belief timing
//!
//! Detector verdicts move the owning observer's belief at verdict time.
//! Triangle endpoints learn of a failure at exactly the echo bound B after
//! it happens, the opposite node one slice-plus-propagation later; recovery
//! is noticed a carrier-detect lag after the link returns. A flap shorter
//! than the echo bound never flips triangle beliefs at all — recovery
//! knowledge outruns failure knowledge, so the endpoint simply sees a
//! reverted transfer on a healthy link. Those micro-flap ghosts close at the
//! actual recovery instant.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detectors::bfd::{BfdParams, BfdSession};
use crate::detectors::fixed_timeout::{FixedTimeoutParams, FixedTimeoutProber};
use crate::detectors::k8s::{K8sNodeMonitor, K8sParams};
use crate::detectors::phi::{PhiAccrualDetector, PhiParams, TailFit};
use crate::detectors::status_poll::{StatusPollDetector, StatusPollParams};
use crate::detectors::{run_detector, DetectorVerdict, LinkDetector, Status};
use crate::error::{Error, Result};
use crate::faults::{
    schedule_link_flaps, schedule_link_hard_failure, sort_schedule, write_fault_csv, FaultEvent,
    FaultKind, FlapModel, HardFailureModel, LinkTimeline, SilentDegradeModel,
};
use crate::oae::OaeLinkParams;
use crate::rng::SeedDomain;
use crate::time::{SimDuration, SimTime};
use crate::topology::{
    write_ghost_csv, GhostRecord, GhostStats, Graph, LinkId, NodeId, ObserverId, TopologyTracker,
};
use crate::workload::checkpoint::{non_atomic_monte_carlo, non_atomic_probability};
use crate::workload::queue::{
    hysteresis_experiment, write_workload_csv, CapacityTrigger, RetryShed, WorkloadConfig,
    WorkloadSeries, WorkloadTotals,
};

/// Config schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Config tree. Natural units (seconds, milliseconds, nanoseconds, QPS) as
// f64; JSON emit/parse round-trips exactly.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    /// Artifact directory for this scenario; overrides the runner's default
    /// output root when set.
    #[serde(default)]
    pub out_dir: Option<String>,
    pub horizon_secs: f64,
    pub topology: TopologySpec,
    #[serde(default)]
    pub faults: Option<FaultPlan>,
    #[serde(default)]
    pub detectors: Vec<DetectorSpec>,
    /// Bounded-delay link observers on the triangle (requires `triangle`).
    #[serde(default)]
    pub oae: Option<OaeSpec>,
    #[serde(default)]
    pub workload: Option<WorkloadSpec>,
    #[serde(default)]
    pub eq1: Option<Eq1Spec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum TopologySpec {
    /// Two nodes, one link.
    Pair,
    /// Hub node 0, `leaves` leaf nodes, link i = hub to leaf i+1.
    Star { leaves: u32 },
    /// Three nodes, three links: l0=(0,1), l1=(1,2), l2=(2,0).
    Triangle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FaultPlan {
    /// Seeded stochastic flap/hard-failure schedules on every link.
    Generated {
        flap: FlapSpec,
        #[serde(default)]
        hard: Option<HardSpec>,
        #[serde(default)]
        degrade: Option<DegradeSpec>,
    },
    /// A verbatim event list.
    Explicit { events: Vec<FaultEventSpec> },
    /// One outage on one link, onset uniform in a window (varies per seed).
    /// `duration_secs: None` makes it permanent.
    RandomOutage {
        link: u32,
        start_min_secs: f64,
        start_max_secs: f64,
        #[serde(default)]
        duration_secs: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlapSpec {
    pub mttf_hours: f64,
    pub down_min_ms: f64,
    pub down_max_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardSpec {
    pub mtbf_hours: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradeSpec {
    pub probability: f64,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEventSpec {
    pub link: u32,
    pub kind: FaultKind,
    pub t_secs: f64,
    #[serde(default)]
    pub param: f64,
}

/// One detector instance. `link: None` watches every link (one state machine
/// per link, all reporting to the same observer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DetectorSpec {
    FixedTimeout {
        poll_ms: f64,
        timeout_ms: f64,
        retries: u32,
        rtt_ms: f64,
        #[serde(default)]
        link: Option<u32>,
    },
    PhiAccrual {
        hb_interval_ms: f64,
        window: usize,
        threshold: f64,
        fit: FitSpec,
        #[serde(default)]
        link: Option<u32>,
    },
    Bfd {
        tx_interval_ms: f64,
        detect_multiplier: u32,
        suppress_flap_count: usize,
        suppress_window_secs: f64,
        suppressed_interval_ms: f64,
        decay_after_secs: f64,
        #[serde(default)]
        link: Option<u32>,
    },
    K8sNode {
        status_period_secs: f64,
        grace_secs: f64,
        eviction_secs: f64,
        #[serde(default)]
        link: Option<u32>,
    },
    StatusPoll {
        period_secs: f64,
        #[serde(default)]
        link: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSpec {
    Exponential,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OaeSpec {
    pub delta_ns: f64,
    pub slice_time_ns: f64,
    pub carrier_lag_ns: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub offered_qps: f64,
    pub capacity_qps: f64,
    pub queue_limit: usize,
    pub patience_secs: f64,
    #[serde(default)]
    pub max_retries: Option<u32>,
    pub retry_backoff_secs: f64,
    #[serde(default)]
    pub trigger: Option<TriggerSpec>,
    #[serde(default)]
    pub shed: Option<ShedSpec>,
    pub bucket_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    pub factor: f64,
    pub from_secs: f64,
    pub until_secs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShedSpec {
    pub from_secs: f64,
    pub drop_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eq1Spec {
    pub qs: Vec<f64>,
    pub shards: Vec<u32>,
    pub trials: u64,
}

pub fn parse_config(json: &str) -> Result<ScenarioConfig> {
    Ok(serde_json::from_str(json)?)
}

pub fn emit_config(cfg: &ScenarioConfig) -> Result<String> {
    let mut s = serde_json::to_string_pretty(cfg)?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------------------
// Built-in scenarios.
// ---------------------------------------------------------------------------

pub const BUILTIN_NAMES: &[&str] = &[
    "metastable-basic",
    "metastable-shed",
    "retry-1000pct",
    "eq1-sweep",
    "ghost-compare",
    "k8s-partition",
    "bfd-suppression",
    "silent-degrade",
];

/// Look up a built-in scenario by name.
pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let base = |n: &str, horizon: f64| ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: n.to_string(),
        seed: 7,
        out_dir: None,
        horizon_secs: horizon,
        topology: TopologySpec::Pair,
        faults: None,
        detectors: Vec::new(),
        oae: None,
        workload: None,
        eq1: None,
    };
    // Overload drops capacity to 30% for [60 s, 120 s); every attempt then
    // outlives its 1 s patience, unbounded immediate retries take over, and
    // the storm sustains itself against restored capacity.
    let metastable_workload = WorkloadSpec {
        offered_qps: 12.0,
        capacity_qps: 30.0,
        queue_limit: 120,
        patience_secs: 1.0,
        max_retries: None,
        retry_backoff_secs: 0.0,
        trigger: Some(TriggerSpec { factor: 0.3, from_secs: 60.0, until_secs: 120.0 }),
        shed: None,
        bucket_secs: 1.0,
    };
    match name {
        "metastable-basic" => Ok(ScenarioConfig {
            workload: Some(metastable_workload),
            ..base(name, 600.0)
        }),
        "metastable-shed" => Ok(ScenarioConfig {
            workload: Some(WorkloadSpec {
                shed: Some(ShedSpec { from_secs: 200.0, drop_fraction: 0.5 }),
                ..metastable_workload
            }),
            ..base(name, 600.0)
        }),
        "retry-1000pct" => Ok(ScenarioConfig {
            workload: Some(WorkloadSpec {
                offered_qps: 20.0,
                capacity_qps: 30.0,
                queue_limit: 150,
                patience_secs: 0.5,
                max_retries: Some(100),
                retry_backoff_secs: 0.0,
                trigger: Some(TriggerSpec {
                    factor: 1.0 / 3.0,
                    from_secs: 30.0,
                    until_secs: 90.0,
                }),
                shed: None,
                bucket_secs: 1.0,
            }),
            ..base(name, 150.0)
        }),
        "eq1-sweep" => Ok(ScenarioConfig {
            eq1: Some(Eq1Spec {
                qs: vec![0.3, 0.5, 0.9, 0.999],
                shards: vec![1, 2, 64, 4096],
                trials: 100_000,
            }),
            ..base(name, 1.0)
        }),
        // One hard link failure observed two ways at once: triangle endpoints
        // with physical-bound detection vs. a 50 ms timeout prober.
        "ghost-compare" => Ok(ScenarioConfig {
            topology: TopologySpec::Triangle,
            oae: Some(OaeSpec { delta_ns: 500.0, slice_time_ns: 51.2, carrier_lag_ns: 51.2 }),
            detectors: vec![DetectorSpec::FixedTimeout {
                poll_ms: 5.0,
                timeout_ms: 50.0,
                retries: 3,
                rtt_ms: 1.0,
                link: None,
            }],
            faults: Some(FaultPlan::Explicit {
                events: vec![FaultEventSpec {
                    link: 0,
                    kind: FaultKind::HardFail,
                    t_secs: 10.0,
                    param: 0.0,
                }],
            }),
            ..base(name, 60.0)
        }),
        "k8s-partition" => Ok(ScenarioConfig {
            detectors: vec![DetectorSpec::K8sNode {
                status_period_secs: 10.0,
                grace_secs: 40.0,
                eviction_secs: 300.0,
                link: None,
            }],
            faults: Some(FaultPlan::RandomOutage {
                link: 0,
                start_min_secs: 10.0,
                start_max_secs: 60.0,
                duration_secs: None,
            }),
            ..base(name, 600.0)
        }),
        // Three quick flaps arm suppression; the outage at t=20 s is then
        // detected on the slowed hello cadence.
        "bfd-suppression" => Ok(ScenarioConfig {
            detectors: vec![DetectorSpec::Bfd {
                tx_interval_ms: 10.0,
                detect_multiplier: 3,
                suppress_flap_count: 3,
                suppress_window_secs: 15.0,
                suppressed_interval_ms: 2000.0,
                decay_after_secs: 60.0,
                link: None,
            }],
            faults: Some(FaultPlan::Explicit {
                events: vec![
                    FaultEventSpec { link: 0, kind: FaultKind::FlapDown, t_secs: 1.0, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapUp, t_secs: 1.1, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapDown, t_secs: 6.0, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapUp, t_secs: 6.1, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapDown, t_secs: 11.0, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapUp, t_secs: 11.1, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapDown, t_secs: 20.0, param: 0.0 },
                    FaultEventSpec { link: 0, kind: FaultKind::FlapUp, t_secs: 30.0, param: 0.0 },
                ],
            }),
            ..base(name, 60.0)
        }),
        // A 12.8x bandwidth fallback that changes no reachability signal:
        // only the polling observer ever closes its ghost.
        "silent-degrade" => Ok(ScenarioConfig {
            detectors: vec![
                DetectorSpec::FixedTimeout {
                    poll_ms: 5.0,
                    timeout_ms: 50.0,
                    retries: 3,
                    rtt_ms: 1.0,
                    link: None,
                },
                DetectorSpec::PhiAccrual {
                    hb_interval_ms: 100.0,
                    window: 8,
                    threshold: 2.0,
                    fit: FitSpec::Exponential,
                    link: None,
                },
                DetectorSpec::Bfd {
                    tx_interval_ms: 10.0,
                    detect_multiplier: 3,
                    suppress_flap_count: 3,
                    suppress_window_secs: 15.0,
                    suppressed_interval_ms: 1000.0,
                    decay_after_secs: 60.0,
                    link: None,
                },
                DetectorSpec::K8sNode {
                    status_period_secs: 10.0,
                    grace_secs: 40.0,
                    eviction_secs: 300.0,
                    link: None,
                },
                DetectorSpec::StatusPoll { period_secs: 30.0, link: None },
            ],
            faults: Some(FaultPlan::Explicit {
                events: vec![FaultEventSpec {
                    link: 0,
                    kind: FaultKind::SilentDegrade,
                    t_secs: 100.0,
                    param: 1.0 / 12.8,
                }],
            }),
            ..base(name, 200.0)
        }),
        other => Err(Error::config(format!(
            "unknown scenario {other:?}; built-ins: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub horizon_ticks: u64,
    pub fault_count: u64,
    /// Ghost statistics keyed by observer label.
    pub observers: BTreeMap<String, GhostStats>,
    /// Verdict counts keyed by detector label (`kind[entry-index]`).
    pub verdict_counts: BTreeMap<String, u64>,
    #[serde(default)]
    pub workload: Option<WorkloadSummary>,
    #[serde(default)]
    pub eq1: Option<Vec<Eq1Row>>,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSummary {
    pub totals: WorkloadTotals,
    pub recovered: bool,
    pub recovered_at_ticks: Option<u64>,
    pub degraded_dwell_ticks: u64,
    pub nominal_qps: f64,
    pub trace_hash: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq1Row {
    pub q: f64,
    pub shards: u32,
    pub trials: u64,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Everything a run produces: the report plus the raw streams the report is
/// derived from (and which the artifact writer exports).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub faults: Vec<FaultEvent>,
    pub ghosts: Vec<GhostRecord>,
    /// (detector label, verdict), in entry/link/time order.
    pub verdicts: Vec<(String, DetectorVerdict)>,
    pub workload_series: Option<WorkloadSeries>,
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------

fn positive(v: f64, what: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{what} must be finite and > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "config schema_version {} unsupported; this build speaks {}",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if self.name.is_empty() {
            return Err(Error::config("scenario name must not be empty"));
        }
        positive(self.horizon_secs, "horizon_secs")?;
        let link_count = match self.topology {
            TopologySpec::Pair => 1,
            TopologySpec::Star { leaves } => {
                if leaves == 0 {
                    return Err(Error::config("star topology needs at least one leaf"));
                }
                leaves
            }
            TopologySpec::Triangle => 3,
        };
        let check_link = |l: Option<u32>, what: &str| -> Result<()> {
            match l {
                Some(i) if i >= link_count => Err(Error::config(format!(
                    "{what} references link {i}, but the topology has {link_count}"
                ))),
                _ => Ok(()),
            }
        };
        match &self.faults {
            Some(FaultPlan::Generated { flap, hard, degrade }) => {
                positive(flap.mttf_hours, "faults.flap.mttf_hours")?;
                positive(flap.down_min_ms, "faults.flap.down_min_ms")?;
                positive(flap.down_max_ms, "faults.flap.down_max_ms")?;
                if flap.down_min_ms > flap.down_max_ms {
                    return Err(Error::config("faults.flap down bounds inverted"));
                }
                if let Some(h) = hard {
                    positive(h.mtbf_hours, "faults.hard.mtbf_hours")?;
                }
                if let Some(d) = degrade {
                    if !(0.0..=1.0).contains(&d.probability) {
                        return Err(Error::config("degrade probability must be in [0, 1]"));
                    }
                    if !(d.factor > 0.0 && d.factor <= 1.0) {
                        return Err(Error::config("degrade factor must be in (0, 1]"));
                    }
                }
            }
            Some(FaultPlan::Explicit { events }) => {
                for e in events {
                    check_link(Some(e.link), "fault event")?;
                    if !e.t_secs.is_finite() || e.t_secs < 0.0 {
                        return Err(Error::config(format!("fault t_secs invalid: {}", e.t_secs)));
                    }
                }
            }
            Some(FaultPlan::RandomOutage { link, start_min_secs, start_max_secs, duration_secs }) => {
                check_link(Some(*link), "random outage")?;
                if !(start_min_secs.is_finite()
                    && start_max_secs.is_finite()
                    && *start_min_secs >= 0.0
                    && start_min_secs < start_max_secs)
                {
                    return Err(Error::config("random outage window must satisfy 0 <= min < max"));
                }
                if let Some(d) = duration_secs {
                    positive(*d, "random outage duration_secs")?;
                }
            }
            None => {}
        }
        let mut controllers = 0;
        for (i, d) in self.detectors.iter().enumerate() {
            let tag = format!("detectors[{i}]");
            match d {
                DetectorSpec::FixedTimeout { poll_ms, timeout_ms, rtt_ms, link, .. } => {
                    positive(*poll_ms, &format!("{tag}.poll_ms"))?;
                    positive(*timeout_ms, &format!("{tag}.timeout_ms"))?;
                    positive(*rtt_ms, &format!("{tag}.rtt_ms"))?;
                    check_link(*link, &tag)?;
                }
                DetectorSpec::PhiAccrual { hb_interval_ms, window, threshold, link, .. } => {
                    positive(*hb_interval_ms, &format!("{tag}.hb_interval_ms"))?;
                    positive(*threshold, &format!("{tag}.threshold"))?;
                    if *window < 2 {
                        return Err(Error::config(format!("{tag}.window must be >= 2")));
                    }
                    check_link(*link, &tag)?;
                }
                DetectorSpec::Bfd {
                    tx_interval_ms,
                    detect_multiplier,
                    suppress_flap_count,
                    suppress_window_secs,
                    suppressed_interval_ms,
                    decay_after_secs,
                    link,
                } => {
                    positive(*tx_interval_ms, &format!("{tag}.tx_interval_ms"))?;
                    positive(*suppress_window_secs, &format!("{tag}.suppress_window_secs"))?;
                    positive(*suppressed_interval_ms, &format!("{tag}.suppressed_interval_ms"))?;
                    positive(*decay_after_secs, &format!("{tag}.decay_after_secs"))?;
                    if *detect_multiplier == 0 || *suppress_flap_count == 0 {
                        return Err(Error::config(format!("{tag}: multiplier and flap count must be >= 1")));
                    }
                    if suppressed_interval_ms <= tx_interval_ms {
                        return Err(Error::config(format!(
                            "{tag}: suppressed_interval_ms must exceed tx_interval_ms"
                        )));
                    }
                    check_link(*link, &tag)?;
                }
                DetectorSpec::K8sNode { status_period_secs, grace_secs, eviction_secs, link } => {
                    positive(*status_period_secs, &format!("{tag}.status_period_secs"))?;
                    positive(*grace_secs, &format!("{tag}.grace_secs"))?;
                    positive(*eviction_secs, &format!("{tag}.eviction_secs"))?;
                    check_link(*link, &tag)?;
                    controllers += 1;
                }
                DetectorSpec::StatusPoll { period_secs, link } => {
                    positive(*period_secs, &format!("{tag}.period_secs"))?;
                    check_link(*link, &tag)?;
                }
            }
        }
        if controllers > 1 {
            return Err(Error::config(
                "at most one k8s-node detector: the controller view is singular",
            ));
        }
        if let Some(oae) = &self.oae {
            if self.topology != TopologySpec::Triangle {
                return Err(Error::config("oae observers require the triangle topology"));
            }
            positive(oae.delta_ns, "oae.delta_ns")?;
            positive(oae.slice_time_ns, "oae.slice_time_ns")?;
            positive(oae.carrier_lag_ns, "oae.carrier_lag_ns")?;
        }
        if let Some(w) = &self.workload {
            self.workload_config(w)?.validate()?;
        }
        if let Some(e) = &self.eq1 {
            if e.qs.is_empty() || e.shards.is_empty() {
                return Err(Error::config("eq1 grid must not be empty"));
            }
            if e.trials == 0 {
                return Err(Error::config("eq1 trials must be >= 1"));
            }
            for &q in &e.qs {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::config(format!("eq1 q must be in (0, 1), got {q}")));
                }
            }
            for &k in &e.shards {
                if k == 0 {
                    return Err(Error::config("eq1 shard counts must be >= 1"));
                }
            }
        }
        Ok(())
    }

    fn horizon(&self) -> SimTime {
        SimTime::from_secs_f64(self.horizon_secs)
    }

    fn workload_config(&self, w: &WorkloadSpec) -> Result<WorkloadConfig> {
        Ok(WorkloadConfig {
            offered_qps: w.offered_qps,
            capacity_qps: w.capacity_qps,
            queue_limit: w.queue_limit,
            patience: SimDuration::from_secs_f64(w.patience_secs),
            max_retries: w.max_retries,
            retry_backoff: SimDuration::from_secs_f64(w.retry_backoff_secs),
            trigger: w.trigger.map(|t| CapacityTrigger {
                factor: t.factor,
                from: SimTime::from_secs_f64(t.from_secs),
                until: SimTime::from_secs_f64(t.until_secs),
            }),
            shed: w.shed.map(|s| RetryShed {
                from: SimTime::from_secs_f64(s.from_secs),
                drop_fraction: s.drop_fraction,
            }),
            horizon: SimDuration::from_secs_f64(self.horizon_secs),
            bucket: SimDuration::from_secs_f64(w.bucket_secs),
        })
    }
}

// ---------------------------------------------------------------------------
// Execution.
// ---------------------------------------------------------------------------

fn build_graph(spec: TopologySpec) -> (Graph, Vec<LinkId>) {
    match spec {
        TopologySpec::Pair => {
            let (g, l) = Graph::pair();
            (g, vec![l])
        }
        TopologySpec::Star { leaves } => Graph::star(leaves),
        TopologySpec::Triangle => {
            let (g, ls) = Graph::triangle();
            (g, ls.to_vec())
        }
    }
}

fn build_schedule(
    cfg: &ScenarioConfig,
    links: &[LinkId],
    domain: &SeedDomain,
) -> Result<Vec<FaultEvent>> {
    let horizon = cfg.horizon();
    let mut events = match &cfg.faults {
        None => Vec::new(),
        Some(FaultPlan::Generated { flap, hard, degrade }) => {
            let flap_model = FlapModel {
                mttf_hours: flap.mttf_hours,
                down_min: SimDuration::from_millis_f64(flap.down_min_ms),
                down_max: SimDuration::from_millis_f64(flap.down_max_ms),
            };
            let degrade_model = degrade
                .map(|d| SilentDegradeModel { probability: d.probability, factor: d.factor })
                .unwrap_or_default();
            let mut all = Vec::new();
            for &link in links {
                let mut rng = domain.stream(&format!("faults.link{}", link.0));
                let mut evs =
                    schedule_link_flaps(link, &flap_model, &degrade_model, horizon, &mut rng)?;
                if let Some(h) = hard {
                    let model = HardFailureModel { mtbf_hours: h.mtbf_hours };
                    if let Some(hf) = schedule_link_hard_failure(link, &model, horizon, &mut rng)? {
                        evs.retain(|e| e.t < hf.t);
                        evs.push(hf);
                    }
                }
                all.extend(evs);
            }
            all
        }
        Some(FaultPlan::Explicit { events }) => events
            .iter()
            .map(|e| FaultEvent {
                link: LinkId(e.link),
                kind: e.kind,
                t: SimTime::from_secs_f64(e.t_secs),
                param: e.param,
            })
            .collect(),
        Some(FaultPlan::RandomOutage { link, start_min_secs, start_max_secs, duration_secs }) => {
            let mut rng = domain.stream("faults.outage");
            let start = SimTime::from_secs_f64(rng.range_f64(*start_min_secs, *start_max_secs));
            let mut evs = Vec::new();
            match duration_secs {
                None => evs.push(FaultEvent {
                    link: LinkId(*link),
                    kind: FaultKind::HardFail,
                    t: start,
                    param: 0.0,
                }),
                Some(d) => {
                    evs.push(FaultEvent {
                        link: LinkId(*link),
                        kind: FaultKind::FlapDown,
                        t: start,
                        param: 0.0,
                    });
                    let up = start + SimDuration::from_secs_f64(*d);
                    if up < horizon {
                        evs.push(FaultEvent {
                            link: LinkId(*link),
                            kind: FaultKind::FlapUp,
                            t: up,
                            param: 0.0,
                        });
                    }
                }
            }
            evs
        }
    };
    events.retain(|e| e.t < horizon);
    sort_schedule(&mut events);
    Ok(events)
}

fn detector_kind_name(d: &DetectorSpec) -> &'static str {
    match d {
        DetectorSpec::FixedTimeout { .. } => "fixed-timeout",
        DetectorSpec::PhiAccrual { .. } => "phi-accrual",
        DetectorSpec::Bfd { .. } => "bfd",
        DetectorSpec::K8sNode { .. } => "k8s-node",
        DetectorSpec::StatusPoll { .. } => "status-poll",
    }
}

fn build_detector(spec: &DetectorSpec, link: LinkId) -> Box<dyn LinkDetector> {
    match spec {
        DetectorSpec::FixedTimeout { poll_ms, timeout_ms, retries, rtt_ms, .. } => {
            Box::new(FixedTimeoutProber::new(
                link,
                FixedTimeoutParams {
                    poll: SimDuration::from_millis_f64(*poll_ms),
                    timeout: SimDuration::from_millis_f64(*timeout_ms),
                    retries: *retries,
                    rtt: SimDuration::from_millis_f64(*rtt_ms),
                },
            ))
        }
        DetectorSpec::PhiAccrual { hb_interval_ms, window, threshold, fit, .. } => {
            Box::new(PhiAccrualDetector::new(
                link,
                PhiParams {
                    hb_interval: SimDuration::from_millis_f64(*hb_interval_ms),
                    window: *window,
                    threshold: *threshold,
                    fit: match fit {
                        FitSpec::Exponential => TailFit::Exponential,
                        FitSpec::Normal => TailFit::Normal,
                    },
                },
            ))
        }
        DetectorSpec::Bfd {
            tx_interval_ms,
            detect_multiplier,
            suppress_flap_count,
            suppress_window_secs,
            suppressed_interval_ms,
            decay_after_secs,
            ..
        } => Box::new(BfdSession::new(
            link,
            BfdParams {
                tx_interval: SimDuration::from_millis_f64(*tx_interval_ms),
                detect_multiplier: *detect_multiplier,
                suppress_flap_count: *suppress_flap_count,
                suppress_window: SimDuration::from_secs_f64(*suppress_window_secs),
                suppressed_interval: SimDuration::from_millis_f64(*suppressed_interval_ms),
                decay_after: SimDuration::from_secs_f64(*decay_after_secs),
            },
        )),
        DetectorSpec::K8sNode { status_period_secs, grace_secs, eviction_secs, .. } => {
            Box::new(K8sNodeMonitor::new(
                link,
                K8sParams {
                    status_period: SimDuration::from_secs_f64(*status_period_secs),
                    grace: SimDuration::from_secs_f64(*grace_secs),
                    eviction: SimDuration::from_secs_f64(*eviction_secs),
                },
            ))
        }
        DetectorSpec::StatusPoll { period_secs, .. } => Box::new(StatusPollDetector::new(
            link,
            StatusPollParams { period: SimDuration::from_secs_f64(*period_secs) },
        )),
    }
}

fn spec_link(d: &DetectorSpec) -> Option<u32> {
    match d {
        DetectorSpec::FixedTimeout { link, .. }
        | DetectorSpec::PhiAccrual { link, .. }
        | DetectorSpec::Bfd { link, .. }
        | DetectorSpec::K8sNode { link, .. }
        | DetectorSpec::StatusPoll { link, .. } => *link,
    }
}

/// One belief or actual-state mutation, ordered by (time, actual-first,
/// insertion order).
struct TimedOp {
    t: SimTime,
    rank: u8,
    seq: u64,
    op: Op,
}

enum Op {
    ActualUp(LinkId, bool),
    ActualBw(LinkId, f64),
    BelieveUp(ObserverId, LinkId, bool),
    BelieveBw(ObserverId, LinkId, f64),
}

/// Triangle-endpoint belief changes for one link's fault history.
///
/// Failure knowledge lands at exactly t+B (endpoints) and t+B+one_way (the
/// opposite node); recovery knowledge at r+carrier_lag (+one_way). A flap
/// with r+carrier_lag <= t+B is a micro-flap: recovery knowledge would
/// arrive before failure knowledge, so neither belief ever changes.
fn oae_ops(
    schedule: &[FaultEvent],
    links: &[LinkId],
    params: &OaeLinkParams,
    push: &mut impl FnMut(SimTime, Op),
) {
    let echo = params.echo_bound();
    let one_way = params.one_way();
    let lag = params.carrier_lag;
    for (k, &link) in links.iter().enumerate() {
        let a = NodeId(k as u32);
        let b = NodeId((k as u32 + 1) % 3);
        let third = NodeId((k as u32 + 2) % 3);
        let mut pending_down: Option<SimTime> = None;
        let emit = |t_ends: SimTime, t_third: SimTime, up: bool, push: &mut dyn FnMut(SimTime, Op)| {
            push(t_ends, Op::BelieveUp(ObserverId::Node(a), link, up));
            push(t_ends, Op::BelieveUp(ObserverId::Node(b), link, up));
            push(t_third, Op::BelieveUp(ObserverId::Node(third), link, up));
        };
        for e in schedule.iter().filter(|e| e.link == link) {
            match e.kind {
                FaultKind::FlapDown | FaultKind::HardFail => {
                    if pending_down.is_none() {
                        pending_down = Some(e.t);
                    }
                }
                FaultKind::FlapUp => {
                    if let Some(t0) = pending_down.take() {
                        if e.t + lag <= t0 + echo {
                            continue; // micro-flap: belief never moves
                        }
                        emit(t0 + echo, t0 + echo + one_way, false, push);
                        emit(e.t + lag, e.t + lag + one_way, true, push);
                    }
                }
                FaultKind::SilentDegrade => {} // invisible without a status poll
            }
        }
        if let Some(t0) = pending_down {
            emit(t0 + echo, t0 + echo + one_way, false, push);
        }
    }
}

/// Execute a scenario: build the world, run every observer, settle the ghost
/// ledger, and run the workload / checkpoint experiments if configured.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let horizon = cfg.horizon();
    let domain = SeedDomain::new(cfg.seed);
    let (graph, links) = build_graph(cfg.topology);
    let node_count = graph.nodes().len() as u32;
    let schedule = build_schedule(cfg, &links, &domain)?;
    let timelines: Vec<LinkTimeline> =
        links.iter().map(|&l| LinkTimeline::from_schedule(&schedule, l)).collect();

    // Observer roster.
    let mut observers: Vec<ObserverId> = Vec::new();
    if cfg.oae.is_some() {
        observers.extend((0..3).map(|k| ObserverId::Node(NodeId(k))));
    }
    let detector_observer = |idx: usize, d: &DetectorSpec| match d {
        DetectorSpec::K8sNode { .. } => ObserverId::Controller,
        _ => ObserverId::Node(NodeId(node_count + idx as u32)),
    };
    for (i, d) in cfg.detectors.iter().enumerate() {
        observers.push(detector_observer(i, d));
    }

    let mut ops: Vec<TimedOp> = Vec::new();
    let mut seq = 0u64;
    let mut push = |ops: &mut Vec<TimedOp>, t: SimTime, rank: u8, op: Op| {
        ops.push(TimedOp { t, rank, seq, op });
        seq += 1;
    };

    for e in &schedule {
        let op = match e.kind {
            FaultKind::FlapDown | FaultKind::HardFail => Op::ActualUp(e.link, false),
            FaultKind::FlapUp => Op::ActualUp(e.link, true),
            FaultKind::SilentDegrade => Op::ActualBw(e.link, e.param),
        };
        push(&mut ops, e.t, 0, op);
    }

    // Detectors.
    let mut verdicts: Vec<(String, DetectorVerdict)> = Vec::new();
    let mut verdict_counts: BTreeMap<String, u64> = BTreeMap::new();
    for (i, d) in cfg.detectors.iter().enumerate() {
        let label = format!("{}[{i}]", detector_kind_name(d));
        verdict_counts.insert(label.clone(), 0);
        let observer = detector_observer(i, d);
        let watched: Vec<usize> = match spec_link(d) {
            Some(l) => vec![l as usize],
            None => (0..links.len()).collect(),
        };
        for li in watched {
            let mut det = build_detector(d, links[li]);
            let run = run_detector(det.as_mut(), &timelines[li], horizon)?;
            for v in &run.verdicts {
                let up = match v.status {
                    Status::Alive => Some(true),
                    Status::Dead => Some(false),
                    Status::Suspect => None, // suspicion is not yet a belief
                };
                if let Some(up) = up {
                    push(&mut ops, v.t, 1, Op::BelieveUp(observer, links[li], up));
                }
                verdicts.push((label.clone(), *v));
                *verdict_counts.get_mut(&label).expect("label preinserted") += 1;
            }
            for &(t, bw) in &run.bandwidth_observations {
                push(&mut ops, t, 1, Op::BelieveBw(observer, links[li], bw));
            }
        }
    }

    // Triangle endpoints.
    if let Some(oae) = &cfg.oae {
        let params = OaeLinkParams {
            delta: SimDuration::from_nanos_f64(oae.delta_ns),
            slice_time: SimDuration::from_nanos_f64(oae.slice_time_ns),
            carrier_lag: SimDuration::from_nanos_f64(oae.carrier_lag_ns),
        };
        oae_ops(&schedule, &links, &params, &mut |t, op| {
            push(&mut ops, t, 1, op);
        });
    }

    // Settle the ledger.
    let mut tracker = TopologyTracker::new(graph, observers);
    ops.sort_by_key(|o| (o.t, o.rank, o.seq));
    for o in ops {
        if o.t >= horizon {
            continue;
        }
        match o.op {
            Op::ActualUp(l, up) => tracker.set_actual(l, up, o.t)?,
            Op::ActualBw(l, bw) => tracker.set_actual_bandwidth(l, bw, o.t)?,
            Op::BelieveUp(obs, l, up) => tracker.set_belief(obs, l, up, o.t)?,
            Op::BelieveBw(obs, l, bw) => tracker.set_belief_bandwidth(obs, l, bw, o.t)?,
        }
    }
    let ghosts = tracker.records();
    let stats = tracker.ghost_stats(horizon);

    // Workload.
    let mut workload_summary = None;
    let mut workload_series = None;
    if let Some(w) = &cfg.workload {
        let wcfg = cfg.workload_config(w)?;
        let out = hysteresis_experiment(&wcfg, &domain)?;
        workload_summary = Some(WorkloadSummary {
            totals: out.report.totals,
            recovered: out.recovered,
            recovered_at_ticks: out.recovered_at.map(|t| t.ticks()),
            degraded_dwell_ticks: out.degraded_dwell.ticks(),
            nominal_qps: out.nominal_qps,
            trace_hash: out.report.trace_hash,
        });
        workload_series = Some(out.report.series);
    }

    // Checkpoint non-atomicity grid.
    let eq1_rows = match &cfg.eq1 {
        None => None,
        Some(e) => {
            let mut rows = Vec::new();
            for &q in &e.qs {
                for &k in &e.shards {
                    let mut rng = domain.stream(&format!("eq1.q{q}.k{k}"));
                    let mc = non_atomic_monte_carlo(q, k, e.trials, &mut rng)?;
                    rows.push(Eq1Row {
                        q,
                        shards: k,
                        trials: e.trials,
                        closed_form: non_atomic_probability(q, k)?,
                        estimate: mc.estimate,
                        std_error: mc.std_error,
                    });
                }
            }
            Some(rows)
        }
    };

    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        horizon_ticks: horizon.ticks(),
        fault_count: schedule.len() as u64,
        observers: stats.into_iter().map(|(o, s)| (o.to_string(), s)).collect(),
        verdict_counts,
        workload: workload_summary,
        eq1: eq1_rows,
        config: cfg.clone(),
    };
    Ok(RunOutput { report, faults: schedule, ghosts, verdicts, workload_series })
}

// ---------------------------------------------------------------------------
// Artifacts.
// ---------------------------------------------------------------------------

/// Write all artifacts for a run into `dir` (created if needed) and return
/// the paths written, in a fixed order: `config.json`, `report.json`,
/// `faults.csv`, `ghosts.csv`, `verdicts.csv`, then `workload.csv` /
/// `eq1.csv` when the run produced them.
pub fn write_artifacts(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };

    emit("config.json", emit_config(&out.report.config)?.into_bytes())?;
    let mut report = serde_json::to_string_pretty(&out.report)?;
    report.push('\n');
    emit("report.json", report.into_bytes())?;

    let mut buf = Vec::new();
    write_fault_csv(&out.faults, &mut buf)?;
    emit("faults.csv", buf)?;

    let mut buf = Vec::new();
    write_ghost_csv(&out.ghosts, SimTime::from_ticks(out.report.horizon_ticks), &mut buf)?;
    emit("ghosts.csv", buf)?;

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["detector", "subject", "status", "t", "suspicion"])?;
        for (label, v) in &out.verdicts {
            w.write_record([
                label.clone(),
                v.subject.to_string(),
                v.status.to_string(),
                v.t.ticks().to_string(),
                format!("{}", v.suspicion),
            ])?;
        }
        w.flush()?;
    }
    emit("verdicts.csv", buf)?;

    if let Some(series) = &out.workload_series {
        let mut buf = Vec::new();
        write_workload_csv(series, &mut buf)?;
        emit("workload.csv", buf)?;
    }
    if let Some(rows) = &out.report.eq1 {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(["q", "shards", "trials", "closed_form", "estimate", "std_error"])?;
            for r in rows {
                w.write_record([
                    format!("{}", r.q),
                    r.shards.to_string(),
                    r.trials.to_string(),
                    format!("{}", r.closed_form),
                    format!("{}", r.estimate),
                    format!("{}", r.std_error),
                ])?;
            }
            w.flush()?;
        }
        emit("eq1.csv", buf)?;
    }
    Ok(written)
}
