//! Checkpoint atomicity across independent shards.
//!
//! A checkpoint spread over K shards, each persisting independently with
//! probability q, is atomic only if all K succeed or all K fail. The
//! probability of the bad middle ground is `1 - q^K - (1-q)^K`, which
//! rushes toward 1 exponentially fast in K: at q = 0.999 a 4096-shard
//! checkpoint is non-atomic ≈ 98.3% of the time. The Monte Carlo estimator
//! here exists purely as an independent check on that closed form.
//!
//! The feedback iteration models the second-order effect: recovering from a
//! failure costs extra load, and extra load raises the failure rate. When
//! the loop gain (cost × sensitivity) reaches 1, recovery work outruns
//! recovery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Probability that a K-shard checkpoint lands neither all-persisted nor
/// all-lost: `1 - q^K - (1-q)^K`.
///
/// Evaluated via the canonical pair `(1 - hi, hi)` with `hi = max(q, 1-q)`,
/// so complementary inputs `q` and `1 - q` produce bit-identical results.
pub fn non_atomic_probability(q: f64, shards: u32) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::config(format!(
            "per-shard persistence probability must be in (0, 1), got {q}"
        )));
    }
    if shards < 1 {
        return Err(Error::config("shard count must be >= 1"));
    }
    let hi = q.max(1.0 - q);
    let lo = 1.0 - hi;
    let k = shards as i32;
    Ok((1.0 - hi.powi(k) - lo.powi(k)).clamp(0.0, 1.0))
}

/// Monte Carlo estimate of the same probability, with its binomial standard
/// error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonAtomicEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Draw `trials` checkpoints of `shards` independent Bernoulli(q) shard
/// outcomes and count the mixed ones. A trial stops at the first shard that
/// disagrees with the first — once mixed, always mixed.
pub fn non_atomic_monte_carlo(
    q: f64,
    shards: u32,
    trials: u64,
    rng: &mut RngStream,
) -> Result<NonAtomicEstimate> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::config(format!(
            "per-shard persistence probability must be in (0, 1), got {q}"
        )));
    }
    if shards < 1 {
        return Err(Error::config("shard count must be >= 1"));
    }
    if trials < 1 {
        return Err(Error::config("trial count must be >= 1"));
    }
    let mut mixed = 0u64;
    for _ in 0..trials {
        let first = rng.chance(q);
        for _ in 1..shards {
            if rng.chance(q) != first {
                mixed += 1;
                break;
            }
        }
    }
    let p = mixed as f64 / trials as f64;
    let std_error = (p * (1.0 - p) / trials as f64).sqrt();
    Ok(NonAtomicEstimate { estimate: p, std_error, trials })
}

/// Parameters of the checkpoint-load feedback loop. Failure rate responds
/// linearly to load: `f(L) = base_rate + rate_per_load * L`; each failure
/// adds `checkpoint_cost` of load on top of the steady `base_load`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackParams {
    pub base_load: f64,
    pub base_rate: f64,
    pub rate_per_load: f64,
    pub checkpoint_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum FeedbackVerdict {
    /// Loop gain < 1: the load trajectory settles at the fixed point.
    Converges { fixed_point: f64 },
    /// Loop gain >= 1: every failure buys more failures than it pays for.
    Diverges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTrajectory {
    /// `loads[n]` is the load after n rounds of feedback, starting at the
    /// base load.
    pub loads: Vec<f64>,
    /// cost × sensitivity: the multiplier each round of induced failures
    /// applies to the next.
    pub loop_gain: f64,
    pub verdict: FeedbackVerdict,
}

/// Iterate `L_{n+1} = base_load + checkpoint_cost * f(L_n)` for `steps`
/// rounds. With a linear failure-rate response the verdict is exact: the
/// iteration converges to `(base_load + cost*base_rate) / (1 - gain)` when
/// the loop gain is below 1 and diverges otherwise (at gain exactly 1 the
/// load grows without bound arithmetically, so it counts as divergent).
pub fn feedback_iterate(params: &FeedbackParams, steps: u32) -> Result<FeedbackTrajectory> {
    if steps < 1 {
        return Err(Error::config("feedback iteration needs at least one step"));
    }
    for (name, v) in [
        ("base_load", params.base_load),
        ("base_rate", params.base_rate),
        ("rate_per_load", params.rate_per_load),
        ("checkpoint_cost", params.checkpoint_cost),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::config(format!("{name} must be finite and >= 0, got {v}")));
        }
    }

    let gain = params.checkpoint_cost * params.rate_per_load;
    let mut loads = Vec::with_capacity(steps as usize + 1);
    let mut load = params.base_load;
    loads.push(load);
    for _ in 0..steps {
        let failure_rate = params.base_rate + params.rate_per_load * load;
        load = params.base_load + params.checkpoint_cost * failure_rate;
        loads.push(load);
    }

    let verdict = if gain < 1.0 {
        FeedbackVerdict::Converges {
            fixed_point: (params.base_load + params.checkpoint_cost * params.base_rate)
                / (1.0 - gain),
        }
    } else {
        FeedbackVerdict::Diverges
    };

    Ok(FeedbackTrajectory { loads, loop_gain: gain, verdict })
}
