//! Hot-path benchmarks: the event kernel, fault-schedule generation, the
//! retry-storm queue, the checkpoint Monte Carlo, and a whole scenario run.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use std::hint::black_box;

use ghostsim_core::faults::{schedule_link_flaps, FlapModel, SilentDegradeModel};
use ghostsim_core::scenario::{builtin, run_scenario};
use ghostsim_core::workload::checkpoint::non_atomic_monte_carlo;
use ghostsim_core::workload::queue::{hysteresis_experiment, CapacityTrigger, WorkloadConfig};
use ghostsim_core::{ComponentId, Engine, LinkId, SeedDomain, SimDuration, SimTime};

/// Schedule-and-drain cost of the kernel: every handled event schedules one
/// successor until the horizon, a self-clocking 100 kHz tick.
fn bench_kernel(c: &mut Criterion) {
    let events_per_run = 100_000u64;
    let mut g = c.benchmark_group("kernel");
    g.throughput(Throughput::Elements(events_per_run));
    g.bench_function("schedule_and_drain_100k", |b| {
        b.iter(|| {
            let mut eng: Engine<u64> = Engine::new();
            let tick = SimDuration::from_micros(10);
            eng.schedule(SimTime::ZERO, ComponentId(0), 0).unwrap();
            let horizon = SimTime::ZERO + tick * events_per_run;
            let summary = eng
                .run_until(horizon, |eng, ev| {
                    if ev.payload + 1 < events_per_run {
                        eng.schedule(ev.fire_at + tick, ev.target, ev.payload + 1)?;
                    }
                    Ok(())
                })
                .unwrap();
            black_box(summary);
        })
    });
    g.finish();
}

/// Per-link flap schedule generation at fleet-realistic rates: ~3000
/// flaps/year/link over a simulated year.
fn bench_flap_generation(c: &mut Criterion) {
    let domain = SeedDomain::new(11);
    let model = FlapModel { mttf_hours: 3.0, ..FlapModel::default() };
    let degrade = SilentDegradeModel { probability: 0.01, ..SilentDegradeModel::default() };
    let horizon = SimTime::from_secs(365 * 24 * 3600);
    c.bench_function("faults/one_link_year", |b| {
        b.iter_batched(
            || domain.stream("flaps"),
            |mut rng| {
                let events =
                    schedule_link_flaps(LinkId(0), &model, &degrade, horizon, &mut rng).unwrap();
                black_box(events)
            },
            BatchSize::SmallInput,
        )
    });
}

/// The retry-storm queue through a trigger-and-recovery experiment.
fn bench_retry_storm(c: &mut Criterion) {
    let cfg = WorkloadConfig {
        offered_qps: 20.0,
        capacity_qps: 30.0,
        queue_limit: 150,
        patience: SimDuration::from_millis(500),
        max_retries: Some(4),
        retry_backoff: SimDuration::ZERO,
        trigger: Some(CapacityTrigger {
            factor: 1.0 / 3.0,
            from: SimTime::from_secs(10),
            until: SimTime::from_secs(40),
        }),
        shed: None,
        horizon: SimDuration::from_secs(60),
        bucket: SimDuration::from_secs(1),
    };
    let domain = SeedDomain::new(7);
    c.bench_function("workload/retry_storm_60s", |b| {
        b.iter(|| {
            let out = hysteresis_experiment(black_box(&cfg), &domain).unwrap();
            black_box(out)
        })
    });
}

/// Checkpoint non-atomicity Monte Carlo, the widest grid cell.
fn bench_checkpoint_mc(c: &mut Criterion) {
    let domain = SeedDomain::new(3);
    let mut g = c.benchmark_group("checkpoint");
    g.throughput(Throughput::Elements(10_000));
    g.bench_function("mc_q999_k4096_10k", |b| {
        b.iter_batched(
            || domain.stream("mc"),
            |mut rng| black_box(non_atomic_monte_carlo(0.999, 4096, 10_000, &mut rng).unwrap()),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

/// A full scenario run end to end (no artifact IO).
fn bench_scenario(c: &mut Criterion) {
    let cfg = builtin("ghost-compare").unwrap();
    c.bench_function("scenario/ghost_compare", |b| {
        b.iter(|| black_box(run_scenario(black_box(&cfg)).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_kernel,
    bench_flap_generation,
    bench_retry_storm,
    bench_checkpoint_mc,
    bench_scenario
);
criterion_main!(benches);
