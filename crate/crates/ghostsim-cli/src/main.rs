//! `ghostsim`: run topology-divergence scenarios and export their metrics.
//!
//! Verbs:
//! - `run <scenario>`: execute one scenario (built-in name or JSON path) and
//!   write its artifact set.
//! - `sweep <scenario>`: run a seed range and/or a timeout grid; one artifact
//!   set per point plus an `aggregate.csv`.
//! - `table1`: fleet-scale failure arithmetic for the built-in cluster
//!   generations, with seeded empirical estimates.
//! - `list-scenarios`: names and one-line descriptions of the built-ins.
//! - `validate <scenario>`: parse + validate a config, touching nothing.
//!
//! Output root resolution: `--out` flag, else the config's `out_dir`, else
//! `$GHOSTSIM_OUT`, else `./ghostsim-out`.
//!
//! Exit codes: 0 ok; 1 config error (bad flag, bad config, unknown
//! scenario); 2 runtime failure (I/O, broken invariant).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ghostsim_core::error::{Error, Result};
use ghostsim_core::faults::read_fault_csv;
use ghostsim_core::fleet::{assess_row, builtin_rows, write_fleet_csv, PerLinkReliability};
use ghostsim_core::scenario::{
    builtin, parse_config, run_scenario, write_artifacts, DetectorSpec, FaultEventSpec, FaultPlan,
    RunOutput, ScenarioConfig, BUILTIN_NAMES,
};
use ghostsim_core::SeedDomain;

const OUT_ENV: &str = "GHOSTSIM_OUT";
const DEFAULT_OUT: &str = "ghostsim-out";

#[derive(Parser)]
#[command(name = "ghostsim", version, about = "Deterministic simulator for topology ghosts: \
the divergence between a network and its observers' beliefs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write config/report/CSV artifacts.
    Run {
        /// Built-in scenario name, or path to a scenario JSON file.
        scenario: String,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output root (overrides config out_dir and $GHOSTSIM_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the fault plan with events replayed from a faults.csv.
        #[arg(long, value_name = "FILE")]
        replay_faults: Option<PathBuf>,
    },
    /// Run a seed range and/or a fixed-timeout grid; emit aggregate.csv.
    Sweep {
        /// Built-in scenario name, or path to a scenario JSON file.
        scenario: String,
        /// Seeds: "N" (1..=N), "A..=B", or a comma list "3,5,8".
        #[arg(long, default_value = "1..=20")]
        seeds: String,
        /// Timeout grid in ms applied to every fixed-timeout detector.
        #[arg(long, value_delimiter = ',', value_name = "MS,...")]
        tau_ms: Vec<f64>,
        /// Output root (overrides config out_dir and $GHOSTSIM_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). Points are independent.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Fleet failure arithmetic for the built-in cluster generations.
    Table1 {
        /// Draws per row for the empirical inter-arrival estimate.
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output root for fleet.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in scenarios.
    ListScenarios,
    /// Parse and validate a scenario config without running it.
    Validate {
        /// Built-in scenario name, or path to a scenario JSON file.
        scenario: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are successes; anything else is a config error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { scenario, seed, out, replay_faults } => {
            let mut cfg = load_scenario(&scenario)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(path) = replay_faults {
                cfg.faults = Some(load_fault_replay(&path)?);
                cfg.validate()?;
            }
            let dir = out_root(out.as_deref(), &cfg).join(&cfg.name);
            let output = run_scenario(&cfg)?;
            let files = write_artifacts(&output, &dir)?;
            print_run_summary(&output);
            println!("artifacts: {} files under {}", files.len(), dir.display());
            Ok(())
        }
        Cmd::Sweep { scenario, seeds, tau_ms, out, jobs } => {
            let cfg = load_scenario(&scenario)?;
            let seeds = parse_seeds(&seeds)?;
            let dir = out_root(out.as_deref(), &cfg).join(format!("{}-sweep", cfg.name));
            run_sweep(&cfg, &seeds, &tau_ms, &dir, jobs)
        }
        Cmd::Table1 { trials, seed, out } => run_table1(trials, seed, out.as_deref()),
        Cmd::ListScenarios => {
            for name in BUILTIN_NAMES {
                println!("{name:<18} {}", builtin_summary(name));
            }
            Ok(())
        }
        Cmd::Validate { scenario } => {
            let cfg = load_scenario(&scenario)?;
            println!("ok: scenario {:?} (seed {}, horizon {} s)", cfg.name, cfg.seed, cfg.horizon_secs);
            Ok(())
        }
    }
}

fn builtin_summary(name: &str) -> &'static str {
    match name {
        "metastable-basic" => "overload trigger + unbounded immediate retries; never recovers",
        "metastable-shed" => "same storm, 50% retry shedding from t=200s; recovers",
        "retry-1000pct" => "bounded retries amplify offered load past 10x during overload",
        "eq1-sweep" => "checkpoint non-atomicity: closed form vs Monte Carlo over a (q, K) grid",
        "ghost-compare" => "one hard link failure: triangle echo bound vs 50 ms timeout prober",
        "k8s-partition" => "node-lifecycle controller view of a randomly timed partition",
        "bfd-suppression" => "flap damping slows hellos; the next outage ghost stretches >100x",
        "silent-degrade" => "bandwidth fallback invisible to every liveness detector",
        _ => "",
    }
}

/// Resolve a scenario argument: a path if it looks like one (or exists),
/// otherwise a built-in name.
fn load_scenario(arg: &str) -> Result<ScenarioConfig> {
    let looks_like_path =
        arg.ends_with(".json") || arg.contains(std::path::MAIN_SEPARATOR) || Path::new(arg).is_file();
    let cfg = if looks_like_path {
        let text = fs::read_to_string(arg)
            .map_err(|e| Error::config(format!("cannot read scenario file {arg:?}: {e}")))?;
        parse_config(&text)?
    } else {
        builtin(arg)?
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load_fault_replay(path: &Path) -> Result<FaultPlan> {
    let text = fs::read(path)
        .map_err(|e| Error::config(format!("cannot read fault file {}: {e}", path.display())))?;
    let events = read_fault_csv(text.as_slice())?
        .into_iter()
        .map(|e| FaultEventSpec {
            link: e.link.0,
            kind: e.kind,
            t_secs: e.t.as_secs_f64(),
            param: e.param,
        })
        .collect();
    Ok(FaultPlan::Explicit { events })
}

fn out_root(flag: Option<&Path>, cfg: &ScenarioConfig) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(d) = &cfg.out_dir {
        return PathBuf::from(d);
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// "N" (meaning 1..=N), "A..=B", "A..B", or "a,b,c".
fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let bad = |s: &str| Error::config(format!("cannot parse seed range {s:?}"));
    let spec = spec.trim();
    let parse_one = |s: &str| s.trim().parse::<u64>().map_err(|_| bad(spec));
    let seeds: Vec<u64> = if let Some((a, b)) = spec.split_once("..=") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        (a..=b).collect()
    } else if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        (a..b).collect()
    } else if spec.contains(',') {
        spec.split(',').map(parse_one).collect::<Result<_>>()?
    } else {
        let n = parse_one(spec)?;
        (1..=n).collect()
    };
    if seeds.is_empty() {
        return Err(Error::config(format!("seed range {spec:?} is empty")));
    }
    Ok(seeds)
}

fn has_fixed_timeout(cfg: &ScenarioConfig) -> bool {
    cfg.detectors.iter().any(|d| matches!(d, DetectorSpec::FixedTimeout { .. }))
}

fn apply_tau(cfg: &mut ScenarioConfig, tau: f64) {
    for d in &mut cfg.detectors {
        if let DetectorSpec::FixedTimeout { timeout_ms, .. } = d {
            *timeout_ms = tau;
        }
    }
}

fn run_sweep(
    base: &ScenarioConfig,
    seeds: &[u64],
    tau_ms: &[f64],
    dir: &Path,
    jobs: Option<usize>,
) -> Result<()> {
    if !tau_ms.is_empty() && !has_fixed_timeout(base) {
        return Err(Error::config(
            "--tau-ms sweeps the fixed-timeout detector, but the scenario has none",
        ));
    }
    for &t in tau_ms {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::config(format!("tau must be finite and > 0 ms, got {t}")));
        }
    }
    // The point list is the cross product; a missing tau grid means "as configured".
    let points: Vec<(u64, Option<f64>)> = match tau_ms {
        [] => seeds.iter().map(|&s| (s, None)).collect(),
        taus => taus
            .iter()
            .flat_map(|&t| seeds.iter().map(move |&s| (s, Some(t))))
            .collect(),
    };

    let run_point = |&(seed, tau): &(u64, Option<f64>)| -> Result<(RunOutput, PathBuf)> {
        let mut cfg = base.clone();
        cfg.seed = seed;
        if let Some(t) = tau {
            apply_tau(&mut cfg, t);
        }
        let sub = match tau {
            None => format!("seed{seed}"),
            Some(t) => format!("tau{t}-seed{seed}"),
        };
        let point_dir = dir.join(sub);
        let output = run_scenario(&cfg)?;
        write_artifacts(&output, &point_dir)?;
        Ok((output, point_dir))
    };

    // Points are independent single-threaded simulations; order of the
    // results vector follows the point list, so the aggregate stays stable.
    let results: Vec<(RunOutput, PathBuf)> = match jobs {
        Some(n) => {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invariant(format!("thread pool: {e}")))?;
            pool.install(|| points.par_iter().map(run_point).collect::<Result<_>>())?
        }
        None => {
            use rayon::prelude::*;
            points.par_iter().map(run_point).collect::<Result<_>>()?
        }
    };

    let mut agg = String::from(
        "seed,tau_ms,fault_count,ghost_total_ticks,ghost_max_ticks,ghost_count,\
         recovered,degraded_dwell_ticks,completed_in_time,offered,retries\n",
    );
    for ((seed, tau), (out, _)) in points.iter().zip(&results) {
        let r = &out.report;
        let total: u64 = r.observers.values().map(|s| s.total.ticks()).sum();
        let max = r.observers.values().map(|s| s.max.ticks()).max().unwrap_or(0);
        let count: u64 = r
            .observers
            .values()
            .map(|s| s.count_stale_up + s.count_stale_down + s.count_silent_degrade)
            .sum();
        let (recovered, dwell, good, offered, retries) = match &r.workload {
            Some(w) => (
                w.recovered.to_string(),
                w.degraded_dwell_ticks.to_string(),
                w.totals.completed_in_time.to_string(),
                w.totals.offered.to_string(),
                w.totals.retries.to_string(),
            ),
            None => Default::default(),
        };
        let tau = tau.map(|t| t.to_string()).unwrap_or_default();
        agg += &format!(
            "{seed},{tau},{},{total},{max},{count},{recovered},{dwell},{good},{offered},{retries}\n",
            r.fault_count
        );
    }
    fs::create_dir_all(dir)?;
    fs::write(dir.join("aggregate.csv"), agg)?;
    println!(
        "swept {} points ({} seeds{}) -> {}",
        points.len(),
        seeds.len(),
        if tau_ms.is_empty() { String::new() } else { format!(" x {} taus", tau_ms.len()) },
        dir.join("aggregate.csv").display()
    );
    Ok(())
}

fn run_table1(trials: u64, seed: u64, out: Option<&Path>) -> Result<()> {
    let per_link = PerLinkReliability::default();
    let domain = SeedDomain::new(seed);
    let rows = builtin_rows()
        .iter()
        .map(|r| {
            let mut rng = domain.stream(&format!("fleet.{}", r.label));
            assess_row(r, &per_link, trials, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    println!(
        "{:<6} {:>12} {:>13} {:>14} {:>14} {:>16} {:>7}",
        "gen", "links(nom)", "links(eff)", "hard/fleet", "flap/fleet", "flap empirical", "flags"
    );
    for a in &rows {
        let mut flags = String::new();
        if !a.hard_consistent {
            flags.push_str("hard!");
        }
        if !a.flap_consistent {
            flags.push_str("flap!");
        }
        if flags.is_empty() {
            flags.push('-');
        }
        println!(
            "{:<6} {:>12} {:>13} {:>14} {:>14} {:>16} {:>7}",
            a.row.label,
            a.row.nominal_links,
            a.derived_links,
            fmt_secs(a.hard_secs_derived),
            fmt_secs(a.row.stated_flap_secs),
            fmt_secs(a.empirical_flap_secs),
            flags
        );
    }

    let root = match out {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(OUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => PathBuf::from(DEFAULT_OUT),
        },
    };
    let dir = root.join("table1");
    fs::create_dir_all(&dir)?;
    let mut buf = Vec::new();
    write_fleet_csv(&rows, &mut buf)?;
    let path = dir.join("fleet.csv");
    fs::write(&path, buf)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fmt_secs(s: f64) -> String {
    if s >= 36.0 * 3600.0 {
        format!("{:.1} d", s / 86_400.0)
    } else if s >= 5400.0 {
        format!("{:.1} h", s / 3600.0)
    } else if s >= 120.0 {
        format!("{:.1} min", s / 60.0)
    } else {
        format!("{:.1} s", s)
    }
}

fn print_run_summary(out: &RunOutput) {
    let r = &out.report;
    println!(
        "scenario {:?} seed {} horizon {:.3}s faults {}",
        r.scenario,
        r.seed,
        r.horizon_ticks as f64 / 1.0e10,
        r.fault_count
    );
    for (obs, s) in &r.observers {
        println!(
            "  observer {obs:<11} ghosts: total {} max {} (stale-up {} stale-down {} degrade {}, false+ {})",
            s.total, s.max, s.count_stale_up, s.count_stale_down, s.count_silent_degrade, s.false_positives
        );
    }
    for (det, n) in &r.verdict_counts {
        println!("  detector {det:<15} verdicts: {n}");
    }
    if let Some(w) = &r.workload {
        println!(
            "  workload: offered {} retries {} in-time {} | recovered: {} dwell<50%: {:.1}s",
            w.totals.offered,
            w.totals.retries,
            w.totals.completed_in_time,
            if w.recovered { "yes" } else { "no" },
            w.degraded_dwell_ticks as f64 / 1.0e10
        );
    }
    if let Some(rows) = &r.eq1 {
        let worst = rows
            .iter()
            .map(|x| (x.estimate - x.closed_form).abs())
            .fold(0.0f64, f64::max);
        println!("  eq1 grid: {} points, worst |mc - closed| = {worst:.2e}", rows.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_specs_parse() {
        assert_eq!(parse_seeds("3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_seeds("5..=7").unwrap(), vec![5, 6, 7]);
        assert_eq!(parse_seeds("5..7").unwrap(), vec![5, 6]);
        assert_eq!(parse_seeds("9,4,2").unwrap(), vec![9, 4, 2]);
        assert!(parse_seeds("")
            .or(parse_seeds("x"))
            .or(parse_seeds("7..=3"))
            .unwrap_err()
            .is_config());
    }

    #[test]
    fn tau_applies_to_every_fixed_timeout_entry() {
        let mut cfg = builtin("ghost-compare").unwrap();
        apply_tau(&mut cfg, 123.0);
        match &cfg.detectors[0] {
            DetectorSpec::FixedTimeout { timeout_ms, .. } => assert_eq!(*timeout_ms, 123.0),
            other => panic!("unexpected {other:?}"),
        }
        assert!(has_fixed_timeout(&cfg));
        assert!(!has_fixed_timeout(&builtin("k8s-partition").unwrap()));
    }

    #[test]
    fn every_builtin_has_a_summary() {
        for name in BUILTIN_NAMES {
            assert!(!builtin_summary(name).is_empty(), "{name}");
        }
    }
}
