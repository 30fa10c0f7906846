//! Named deterministic random streams.
//!
//! Every source of randomness in a run is a [`RngStream`] derived from the
//! scenario's master seed and a stream id string. Streams with distinct ids
//! are statistically independent, and a stream's draw sequence depends only
//! on `(master_seed, id)` — never on how much any other stream has consumed.
//! That lets, say, fault-injection randomness vary across seeds while the
//! workload arrival process stays fixed.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::time::SimDuration;

/// Factory for named streams, bound to one master seed.
#[derive(Debug, Clone, Copy)]
pub struct SeedDomain {
    master_seed: u64,
}

impl SeedDomain {
    pub fn new(master_seed: u64) -> Self {
        SeedDomain { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Open the stream named `id`. The same `(seed, id)` pair always yields
    /// the same draw sequence.
    pub fn stream(&self, id: &str) -> RngStream {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update([0x1f]); // separator so seed/id boundaries can't alias
        hasher.update(id.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RngStream {
            id: id.to_string(),
            rng: ChaCha12Rng::from_seed(key),
        }
    }
}

/// One independent deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: String,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in [0, 1).
    pub fn unit_f64(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn range_usize(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..hi)
    }

    /// Bernoulli trial with success probability `p`.
    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.random::<f64>() < p
    }

    /// Exponential variate with the given mean, by inversion:
    /// `-mean * ln(1 - U)` with `U` uniform in [0, 1).
    pub fn exp_f64(&mut self, mean: f64) -> Result<f64> {
        if !(mean > 0.0) {
            return Err(Error::config(format!(
                "exponential mean must be > 0, got {mean}"
            )));
        }
        let u: f64 = self.rng.random();
        Ok(-mean * (1.0 - u).ln())
    }

    /// Exponential inter-event duration with the given mean.
    pub fn exp_duration(&mut self, mean: SimDuration) -> Result<SimDuration> {
        let ticks = self.exp_f64(mean.ticks() as f64)?;
        // Clamp to the representable range; callers compare against a horizon
        // far below this anyway.
        Ok(SimDuration::from_ticks(ticks.min(u64::MAX as f64 / 2.0) as u64))
    }

    /// Log-uniform draw on [lo, hi]: uniform in log space, so every decade
    /// is equally likely. Used for flap down-durations spanning ms..s.
    pub fn log_uniform_duration(&mut self, lo: SimDuration, hi: SimDuration) -> Result<SimDuration> {
        if lo.is_zero() || hi < lo {
            return Err(Error::config(format!(
                "log-uniform bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if lo == hi {
            return Ok(lo);
        }
        let (a, b) = ((lo.ticks() as f64).ln(), (hi.ticks() as f64).ln());
        let x = self.rng.random_range(a..b).exp();
        Ok(SimDuration::from_ticks(x.round() as u64))
    }
}
