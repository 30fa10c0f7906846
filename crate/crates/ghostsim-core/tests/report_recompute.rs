//! Artifact audit: every figure in an exported `report.json` is re-derived
//! here from the sibling files alone — ghost stats from `ghosts.csv`, verdict
//! counts from `verdicts.csv`, workload totals and the recovery judgement
//! from `workload.csv` plus the config, the checkpoint table from `eq1.csv` —
//! using independent arithmetic rather than the library's accumulators. The
//! trace hash, which digests the in-engine event stream, is covered by
//! re-running the exported config and requiring a bit-identical report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ghostsim_core::faults::{read_fault_csv, write_fault_csv};
use ghostsim_core::scenario::{
    builtin, emit_config, parse_config, run_scenario, write_artifacts, RunReport, ScenarioConfig,
    BUILTIN_NAMES,
};
use ghostsim_core::{SimDuration, SimTime};

type Rows = Vec<Vec<String>>;

fn read_csv(path: &Path, want_header: &[&str]) -> Rows {
    let mut r = csv::Reader::from_path(path)
        .unwrap_or_else(|e| panic!("open {}: {e}", path.display()));
    let header: Vec<String> =
        r.headers().unwrap().iter().map(str::to_string).collect();
    assert_eq!(header, want_header, "{}: unexpected columns", path.display());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn u64_field(row: &[String], i: usize) -> u64 {
    row[i].parse().unwrap_or_else(|e| panic!("field {i} {:?}: {e}", row[i]))
}

fn f64_field(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap_or_else(|e| panic!("field {i} {:?}: {e}", row[i]))
}

/// `config.json` must parse, re-emit byte-identically, and round-trip to an
/// equal value.
fn audit_config(dir: &Path) -> ScenarioConfig {
    let bytes = fs::read_to_string(dir.join("config.json")).unwrap();
    let cfg = parse_config(&bytes).unwrap();
    let emitted = emit_config(&cfg).unwrap();
    assert_eq!(emitted, bytes, "config emit is not a fixed point");
    assert_eq!(parse_config(&emitted).unwrap(), cfg, "config round-trip changed the value");
    cfg
}

/// `faults.csv` row count backs `fault_count`, and the replay importer
/// reproduces the file byte-for-byte.
fn audit_faults(dir: &Path, report: &RunReport) {
    let path = dir.join("faults.csv");
    let rows = read_csv(&path, &["link", "kind", "t", "param"]);
    assert_eq!(rows.len() as u64, report.fault_count, "fault_count vs faults.csv rows");

    let bytes = fs::read(&path).unwrap();
    let events = read_fault_csv(bytes.as_slice()).unwrap();
    let mut rewritten = Vec::new();
    write_fault_csv(&events, &mut rewritten).unwrap();
    assert_eq!(rewritten, bytes, "fault CSV replay is not byte-exact");
}

#[derive(Default, PartialEq, Debug)]
struct GhostTally {
    total: u64,
    max: u64,
    stale_up: u64,
    stale_down: u64,
    silent_degrade: u64,
}

/// Per-observer ghost statistics re-summed from the interval export.
fn audit_ghosts(dir: &Path, report: &RunReport) {
    let rows = read_csv(&dir.join("ghosts.csv"), &["observer", "link", "kind", "t_start", "t_end"]);
    let mut tally: BTreeMap<String, GhostTally> = BTreeMap::new();
    for row in &rows {
        let start = u64_field(row, 3);
        let end = u64_field(row, 4);
        assert!(end > start, "ghost interval must have positive length: {row:?}");
        let t = tally.entry(row[0].clone()).or_default();
        let d = end - start;
        t.total += d;
        t.max = t.max.max(d);
        match row[2].as_str() {
            "stale-up" => t.stale_up += 1,
            "stale-down" => t.stale_down += 1,
            "silent-degrade" => t.silent_degrade += 1,
            other => panic!("unknown ghost kind {other:?}"),
        }
    }
    for label in tally.keys() {
        assert!(report.observers.contains_key(label), "CSV observer {label} missing from report");
    }
    for (label, stats) in &report.observers {
        let got = tally.remove(label).unwrap_or_default();
        let want = GhostTally {
            total: stats.total.ticks(),
            max: stats.max.ticks(),
            stale_up: stats.count_stale_up,
            stale_down: stats.count_stale_down,
            silent_degrade: stats.count_silent_degrade,
        };
        assert_eq!(got, want, "{label}: ghost stats do not re-sum from ghosts.csv");
        assert_eq!(
            stats.false_positives, stats.count_stale_down,
            "{label}: false positives must equal believed-dead-but-healthy records"
        );
    }
}

/// Verdict counts re-tallied from the verdict log.
fn audit_verdicts(dir: &Path, report: &RunReport) {
    let rows = read_csv(&dir.join("verdicts.csv"), &["detector", "subject", "status", "t", "suspicion"]);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for row in &rows {
        *counts.entry(row[0].clone()).or_default() += 1;
        assert!(
            matches!(row[2].as_str(), "alive" | "suspect" | "dead"),
            "unknown status {:?}",
            row[2]
        );
        let _ = u64_field(row, 3);
        assert!(f64_field(row, 4).is_finite(), "non-finite suspicion");
    }
    for label in counts.keys() {
        assert!(report.verdict_counts.contains_key(label), "CSV detector {label} not in report");
    }
    for (label, &want) in &report.verdict_counts {
        let got = counts.get(label).copied().unwrap_or(0);
        assert_eq!(got, want, "{label}: verdict count");
    }
}

/// Workload totals, attempt conservation, and the recovery judgement — the
/// 10-bucket / 90% / 50% rules — re-derived from the bucket series.
fn audit_workload(dir: &Path, report: &RunReport, cfg: &ScenarioConfig) {
    let path = dir.join("workload.csv");
    let (Some(summary), Some(spec)) = (&report.workload, &cfg.workload) else {
        assert!(!path.exists(), "workload.csv present without a workload in the report");
        assert!(report.workload.is_none() && cfg.workload.is_none());
        return;
    };
    let rows = read_csv(
        &path,
        &[
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
        ],
    );
    let col = |i: usize| rows.iter().map(|r| u64_field(r, i)).collect::<Vec<u64>>();
    let offered = col(1);
    let retries = col(2);
    let completed = col(3);
    let n = rows.len();

    let bucket = SimDuration::from_secs_f64(spec.bucket_secs);
    for (b, row) in rows.iter().enumerate() {
        assert_eq!(u64_field(row, 0), bucket.ticks() * b as u64, "bucket {b} start");
    }

    let sum = |v: &[u64]| v.iter().sum::<u64>();
    let t = &summary.totals;
    assert_eq!(sum(&offered), t.offered, "offered total");
    assert_eq!(sum(&retries), t.retries, "retries total");
    assert_eq!(sum(&completed), t.completed_in_time, "completed_in_time total");
    assert_eq!(sum(&col(4)), t.completed_late, "completed_late total");
    assert_eq!(sum(&col(5)), t.abandoned, "abandoned total");
    assert_eq!(sum(&col(6)), t.door_drops, "door_drops total");
    assert_eq!(sum(&col(7)), t.shed_killed, "shed_killed total");
    let undecided_at_end = rows.last().map(|r| u64_field(r, 9)).unwrap_or(0);
    assert_eq!(undecided_at_end, t.undecided_at_end, "undecided at end");
    assert_eq!(
        t.offered + t.retries,
        t.completed_in_time + t.abandoned + t.undecided_at_end,
        "attempt conservation"
    );

    let nominal = spec.offered_qps;
    assert_eq!(summary.nominal_qps.to_bits(), nominal.to_bits(), "nominal is the offered rate");

    // Recovery judgement. Without a capacity trigger the run is trivially
    // recovered; with one, recovery is the first 10-bucket window at or
    // after the trigger onset whose mean goodput reaches 90% of nominal,
    // and dwell sums the post-onset buckets below 50%.
    let (recovered_at, dwell_ticks) = match &spec.trigger {
        None => (None, 0u64),
        Some(tr) => {
            let from_bucket =
                (SimTime::from_secs_f64(tr.from_secs).ticks() / bucket.ticks()) as usize;
            let window = 10usize;
            let mut at = None;
            for i in from_bucket..n.saturating_sub(window - 1) {
                let got: u64 = completed[i..i + window].iter().sum();
                let mean_qps = got as f64 / (window as f64 * bucket.as_secs_f64());
                if mean_qps >= 0.9 * nominal {
                    at = Some(bucket.ticks() * i as u64);
                    break;
                }
            }
            let mut dwell = 0u64;
            for b in from_bucket..n {
                let goodput = completed[b] as f64 / bucket.as_secs_f64();
                if goodput < 0.5 * nominal {
                    dwell += bucket.ticks();
                }
            }
            (at, dwell)
        }
    };
    assert_eq!(summary.recovered, recovered_at.is_some() || spec.trigger.is_none(), "recovered");
    if spec.trigger.is_some() {
        assert_eq!(summary.recovered_at_ticks, recovered_at, "recovery instant");
        assert_eq!(summary.degraded_dwell_ticks, dwell_ticks, "degraded dwell");
    } else {
        assert_eq!(summary.recovered_at_ticks, None);
        assert_eq!(summary.degraded_dwell_ticks, 0);
    }
}

/// The checkpoint table: closed form re-evaluated bit-exactly, Monte Carlo
/// column within three (floored) standard errors.
fn audit_eq1(dir: &Path, report: &RunReport, cfg: &ScenarioConfig) {
    let path = dir.join("eq1.csv");
    let (Some(rows_reported), Some(spec)) = (&report.eq1, &cfg.eq1) else {
        assert!(!path.exists(), "eq1.csv present without a table in the report");
        return;
    };
    let rows = read_csv(&path, &["q", "shards", "trials", "closed_form", "estimate", "std_error"]);
    assert_eq!(rows.len(), spec.qs.len() * spec.shards.len(), "grid size");
    assert_eq!(rows.len(), rows_reported.len(), "report/CSV row count");
    for (row, rep) in rows.iter().zip(rows_reported) {
        let q = f64_field(row, 0);
        let shards = u64_field(row, 1) as i32;
        let trials = u64_field(row, 2);
        let closed = f64_field(row, 3);
        let estimate = f64_field(row, 4);
        let std_error = f64_field(row, 5);

        assert_eq!(q.to_bits(), rep.q.to_bits());
        assert_eq!(shards as u32, rep.shards);
        assert_eq!(trials, rep.trials);
        assert_eq!(closed.to_bits(), rep.closed_form.to_bits());
        assert_eq!(estimate.to_bits(), rep.estimate.to_bits());
        assert_eq!(std_error.to_bits(), rep.std_error.to_bits());

        // 1 - q^K - (1-q)^K over the canonical (max, min) pair.
        let hi = q.max(1.0 - q);
        let lo = 1.0 - hi;
        let independent = (1.0 - hi.powi(shards) - lo.powi(shards)).clamp(0.0, 1.0);
        assert_eq!(independent.to_bits(), closed.to_bits(), "closed form at q={q} K={shards}");

        let bound = 3.0 * std_error.max(1.0 / trials as f64);
        assert!(
            (estimate - closed).abs() <= bound,
            "q={q} K={shards}: estimate {estimate} vs {closed} exceeds {bound}"
        );
    }
}

/// Re-run the exported config from scratch; the fresh report (including the
/// engine trace hash) must be bit-identical to the exported one.
fn audit_rerun(report: &RunReport, cfg: &ScenarioConfig) {
    let fresh = run_scenario(cfg).unwrap();
    assert_eq!(&fresh.report, report, "re-run from config.json diverged from report.json");
    if let (Some(a), Some(b)) = (&fresh.report.workload, &report.workload) {
        assert_eq!(a.trace_hash, b.trace_hash, "workload trace hash");
    }
}

fn audit_scenario(name: &str) {
    let cfg = builtin(name).unwrap();
    let out = run_scenario(&cfg).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    write_artifacts(&out, tmp.path()).unwrap();
    drop(out); // from here on, files only

    let dir = tmp.path();
    let cfg = audit_config(dir);
    let report: RunReport =
        serde_json::from_slice(&fs::read(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.config, cfg, "report embeds a different config than config.json");
    assert_eq!(report.scenario, name);
    assert_eq!(report.seed, cfg.seed);
    assert_eq!(report.horizon_ticks, SimDuration::from_secs_f64(cfg.horizon_secs).ticks());

    audit_faults(dir, &report);
    audit_ghosts(dir, &report);
    audit_verdicts(dir, &report);
    audit_workload(dir, &report, &cfg);
    audit_eq1(dir, &report, &cfg);
    audit_rerun(&report, &cfg);
}

#[test]
fn every_builtin_scenario_is_auditable() {
    assert!(BUILTIN_NAMES.len() >= 8);
}

#[test]
fn audit_metastable_basic() {
    audit_scenario("metastable-basic");
}

#[test]
fn audit_metastable_shed() {
    audit_scenario("metastable-shed");
}

#[test]
fn audit_retry_1000pct() {
    audit_scenario("retry-1000pct");
}

#[test]
fn audit_eq1_sweep() {
    audit_scenario("eq1-sweep");
}

#[test]
fn audit_ghost_compare() {
    audit_scenario("ghost-compare");
}

#[test]
fn audit_k8s_partition() {
    audit_scenario("k8s-partition");
}

#[test]
fn audit_bfd_suppression() {
    audit_scenario("bfd-suppression");
}

#[test]
fn audit_silent_degrade() {
    audit_scenario("silent-degrade");
}
