//! Fleet-scale fault model: link flaps, hard failures, silent degrades.
//!
//! Reliability parameters stay in f64 hours because fleet-scale MTBFs
//! (10^7 h and up) do not fit the integer clock; individual event times are
//! converted to ticks only once they land inside the simulated horizon.
//!
//! Flaps per link are a Poisson process (exponential inter-arrival). The
//! fleet-level process is the superposition: with n i.i.d. links the fleet
//! mean inter-arrival is the per-link mean divided by n. Down durations are
//! log-uniform — flap outages span ~4 decades (milliseconds to seconds) and
//! a uniform draw would almost never produce a short one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::time::{SimDuration, SimTime};
use crate::topology::LinkId;

pub const SECS_PER_HOUR: f64 = 3600.0;

/// Transient-flap process parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlapModel {
    /// Mean time between flaps on one link, in hours.
    pub mttf_hours: f64,
    /// Outage duration bounds for the log-uniform draw.
    pub down_min: SimDuration,
    pub down_max: SimDuration,
}

impl Default for FlapModel {
    fn default() -> Self {
        FlapModel {
            mttf_hours: 3.0e5,
            down_min: SimDuration::from_millis(1),
            down_max: SimDuration::from_secs(10),
        }
    }
}

/// Hard-failure process parameters (failures are permanent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardFailureModel {
    /// Mean time between hard failures on one link, in hours.
    pub mtbf_hours: f64,
}

impl Default for HardFailureModel {
    fn default() -> Self {
        HardFailureModel { mtbf_hours: 1.0e7 }
    }
}

/// Silent bandwidth degradation attached to flap recoveries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SilentDegradeModel {
    /// Probability that a flap recovery comes back degraded.
    pub probability: f64,
    /// Rate multiplier when degraded (PCIe gen/width fallback: x16 gen4
    /// retrained to x1 gen1 is 1/12.8 of nominal).
    pub factor: f64,
}

impl Default for SilentDegradeModel {
    fn default() -> Self {
        SilentDegradeModel { probability: 0.0, factor: 1.0 / 12.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    /// Link goes down, will come back.
    FlapDown,
    /// Link comes back up after a flap.
    FlapUp,
    /// Link goes down permanently.
    HardFail,
    /// Link silently drops to a fraction of its rate (param = factor).
    SilentDegrade,
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FaultKind::FlapDown => write!(f, "flap-down"),
            FaultKind::FlapUp => write!(f, "flap-up"),
            FaultKind::HardFail => write!(f, "hard-fail"),
            FaultKind::SilentDegrade => write!(f, "silent-degrade"),
        }
    }
}

impl std::str::FromStr for FaultKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flap-down" => Ok(FaultKind::FlapDown),
            "flap-up" => Ok(FaultKind::FlapUp),
            "hard-fail" => Ok(FaultKind::HardFail),
            "silent-degrade" => Ok(FaultKind::SilentDegrade),
            other => Err(Error::config(format!("unknown fault kind {other:?}"))),
        }
    }
}

/// One scheduled fault. `param` carries the degrade factor for
/// `SilentDegrade` and is 0 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub link: LinkId,
    pub kind: FaultKind,
    pub t: SimTime,
    pub param: f64,
}

/// Mean fleet-level inter-arrival for n i.i.d. per-link processes, in hours.
pub fn fleet_inter_arrival_hours(per_link_mean_hours: f64, n_links: u64) -> Result<f64> {
    if per_link_mean_hours <= 0.0 {
        return Err(Error::config(format!(
            "per-link mean must be positive, got {per_link_mean_hours}"
        )));
    }
    if n_links == 0 {
        return Err(Error::config("fleet has zero links".to_string()));
    }
    Ok(per_link_mean_hours / n_links as f64)
}

/// Generate the flap schedule for one link over `[0, horizon)`.
///
/// Draw order per flap is fixed (gap, duration, degrade coin) so schedules
/// are reproducible from the stream seed alone. Recoveries that land past
/// the horizon are dropped along with any degrade that would ride on them;
/// the down event itself is kept.
pub fn schedule_link_flaps(
    link: LinkId,
    model: &FlapModel,
    degrade: &SilentDegradeModel,
    horizon: SimTime,
    rng: &mut RngStream,
) -> Result<Vec<FaultEvent>> {
    if model.down_min > model.down_max {
        return Err(Error::config(format!(
            "flap duration bounds inverted: {} > {}",
            model.down_min, model.down_max
        )));
    }
    if !(0.0..=1.0).contains(&degrade.probability) {
        return Err(Error::config(format!(
            "degrade probability must be in [0, 1], got {}",
            degrade.probability
        )));
    }
    let mean_secs = model.mttf_hours * SECS_PER_HOUR;
    let mut out = Vec::new();
    let mut t_secs = 0.0_f64;
    let horizon_secs = horizon.ticks() as f64 / crate::time::TICKS_PER_SEC as f64;
    loop {
        t_secs += rng.exp_f64(mean_secs)?;
        if t_secs >= horizon_secs {
            break;
        }
        let down_at = SimTime::from_secs_f64(t_secs);
        let dur = rng.log_uniform_duration(model.down_min, model.down_max)?;
        let up_at = down_at + dur;
        out.push(FaultEvent { link, kind: FaultKind::FlapDown, t: down_at, param: 0.0 });
        let degraded = rng.chance(degrade.probability);
        if up_at < horizon {
            out.push(FaultEvent { link, kind: FaultKind::FlapUp, t: up_at, param: 0.0 });
            if degraded {
                out.push(FaultEvent {
                    link,
                    kind: FaultKind::SilentDegrade,
                    t: up_at,
                    param: degrade.factor,
                });
            }
        }
        // Next gap starts at recovery; a link can't flap while down.
        t_secs = up_at.ticks() as f64 / crate::time::TICKS_PER_SEC as f64;
    }
    Ok(out)
}

/// Generate at most one hard failure for a link (they are permanent, so the
/// first one within the horizon ends the link's story).
pub fn schedule_link_hard_failure(
    link: LinkId,
    model: &HardFailureModel,
    horizon: SimTime,
    rng: &mut RngStream,
) -> Result<Option<FaultEvent>> {
    let mean_secs = model.mtbf_hours * SECS_PER_HOUR;
    let t_secs = rng.exp_f64(mean_secs)?;
    let horizon_secs = horizon.ticks() as f64 / crate::time::TICKS_PER_SEC as f64;
    if t_secs >= horizon_secs {
        return Ok(None);
    }
    Ok(Some(FaultEvent {
        link,
        kind: FaultKind::HardFail,
        t: SimTime::from_secs_f64(t_secs),
        param: 0.0,
    }))
}

/// Full fleet schedule: flaps plus hard failures for every link, merged into
/// (t, link, kind) order. A hard failure truncates that link's later flaps.
pub fn schedule_fleet(
    links: &[LinkId],
    flap: &FlapModel,
    hard: &HardFailureModel,
    degrade: &SilentDegradeModel,
    horizon: SimTime,
    mut stream_for: impl FnMut(LinkId) -> RngStream,
) -> Result<Vec<FaultEvent>> {
    let mut all = Vec::new();
    for &link in links {
        let mut rng = stream_for(link);
        let mut events = schedule_link_flaps(link, flap, degrade, horizon, &mut rng)?;
        if let Some(hf) = schedule_link_hard_failure(link, hard, horizon, &mut rng)? {
            events.retain(|e| e.t < hf.t);
            // If the hard failure lands mid-outage, the link simply never
            // recovers; drop nothing else.
            let mid_outage = events.last().is_some_and(|e| e.kind == FaultKind::FlapDown);
            if !mid_outage {
                events.push(hf);
            } else {
                events.push(FaultEvent { t: hf.t, ..hf });
            }
        }
        all.extend(events);
    }
    sort_schedule(&mut all);
    Ok(all)
}

/// Canonical schedule order: time, then link, then kind. Down sorts before
/// up so same-instant pairs replay in cause-effect order.
pub fn sort_schedule(events: &mut [FaultEvent]) {
    events.sort_by(|x, y| {
        (x.t.ticks(), x.link, kind_rank(x.kind))
            .cmp(&(y.t.ticks(), y.link, kind_rank(y.kind)))
    });
}

fn kind_rank(k: FaultKind) -> u8 {
    match k {
        FaultKind::FlapDown => 0,
        FaultKind::HardFail => 1,
        FaultKind::FlapUp => 2,
        FaultKind::SilentDegrade => 3,
    }
}

/// Write a fault schedule as CSV: `link,kind,t,param`. Times are clock ticks.
pub fn write_fault_csv<W: std::io::Write>(events: &[FaultEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["link", "kind", "t", "param"])?;
    for e in events {
        w.write_record([
            e.link.0.to_string(),
            e.kind.to_string(),
            e.t.ticks().to_string(),
            format!("{}", e.param),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a fault schedule back from CSV for replay. Round-trips with
/// [`write_fault_csv`] exactly.
pub fn read_fault_csv<R: std::io::Read>(input: R) -> Result<Vec<FaultEvent>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        if row.len() != 4 {
            return Err(Error::config(format!(
                "fault CSV row needs 4 fields, got {}",
                row.len()
            )));
        }
        let link = LinkId(
            row[0]
                .parse()
                .map_err(|e| Error::config(format!("bad link id {:?}: {e}", &row[0])))?,
        );
        let kind: FaultKind = row[1].parse()?;
        let ticks: u64 = row[2]
            .parse()
            .map_err(|e| Error::config(format!("bad timestamp {:?}: {e}", &row[2])))?;
        let param: f64 = row[3]
            .parse()
            .map_err(|e| Error::config(format!("bad param {:?}: {e}", &row[3])))?;
        out.push(FaultEvent { link, kind, t: SimTime::from_ticks(ticks), param });
    }
    Ok(out)
}

/// The actual state of one link over time, as a step function built from a
/// fault schedule. Detectors sample this at probe/heartbeat instants; a
/// transition at exactly `t` is visible to a sample at `t`.
#[derive(Debug, Clone, Default)]
pub struct LinkTimeline {
    // (t, up, bandwidth_factor) after applying the transition at t.
    steps: Vec<(SimTime, bool, f64)>,
}

impl LinkTimeline {
    /// Build from the subset of `schedule` touching `link`. The schedule must
    /// be time-ordered (see [`sort_schedule`]). Links start up at full rate.
    pub fn from_schedule(schedule: &[FaultEvent], link: LinkId) -> Self {
        let mut steps = Vec::new();
        let mut up = true;
        let mut bw;
        for e in schedule.iter().filter(|e| e.link == link) {
            match e.kind {
                FaultKind::FlapDown | FaultKind::HardFail => {
                    up = false;
                    bw = 1.0;
                }
                FaultKind::FlapUp => {
                    up = true;
                    bw = 1.0;
                }
                FaultKind::SilentDegrade => bw = e.param,
            }
            steps.push((e.t, up, bw));
        }
        LinkTimeline { steps }
    }

    pub fn up_at(&self, t: SimTime) -> bool {
        self.sample(t).0
    }

    pub fn bandwidth_at(&self, t: SimTime) -> f64 {
        self.sample(t).1
    }

    fn sample(&self, t: SimTime) -> (bool, f64) {
        match self.steps.partition_point(|s| s.0 <= t) {
            0 => (true, 1.0),
            n => (self.steps[n - 1].1, self.steps[n - 1].2),
        }
    }

    /// Maximal intervals during which the link is down, clipped to `horizon`;
    /// an outage still open at the horizon ends there.
    pub fn down_intervals(&self, horizon: SimTime) -> Vec<(SimTime, SimTime)> {
        let mut out = Vec::new();
        let mut down_since: Option<SimTime> = None;
        for &(t, up, _) in &self.steps {
            if t >= horizon {
                break;
            }
            match (up, down_since) {
                (false, None) => down_since = Some(t),
                (true, Some(t0)) => {
                    out.push((t0, t));
                    down_since = None;
                }
                _ => {}
            }
        }
        if let Some(t0) = down_since {
            out.push((t0, horizon));
        }
        out
    }
}
