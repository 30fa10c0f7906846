//! Simulation time.
//!
//! Time is an integer tick count. One tick is 100 picoseconds (0.1 ns):
//! fine enough to represent sub-nanosecond link constants (a 64-byte frame
//! at 10 Gb/s serializes in 51.2 ns = 512 ticks) without rounding, while a
//! `u64` still spans ~58 years of simulated time, which covers fleet-scale
//! flap horizons of tens of thousands of hours.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Ticks per nanosecond.
pub const TICKS_PER_NS: u64 = 10;
/// Ticks per microsecond.
pub const TICKS_PER_US: u64 = 1_000 * TICKS_PER_NS;
/// Ticks per millisecond.
pub const TICKS_PER_MS: u64 = 1_000 * TICKS_PER_US;
/// Ticks per second.
pub const TICKS_PER_SEC: u64 = 1_000 * TICKS_PER_MS;

/// An absolute instant on the simulation clock.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

/// A span of simulation time.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimDuration(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    /// Largest representable instant; used as an "end of time" sentinel.
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns * TICKS_PER_NS)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * TICKS_PER_US)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * TICKS_PER_MS)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * TICKS_PER_SEC)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimTime(secs_f64_to_ticks(s))
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_SEC as f64
    }

    pub fn as_nanos_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_NS as f64
    }

    /// Time elapsed since `earlier`. Panics if `earlier` is later than `self`.
    pub fn since(self, earlier: SimTime) -> SimDuration {
        SimDuration(
            self.0
                .checked_sub(earlier.0)
                .expect("SimTime::since called with a later instant"),
        )
    }

    pub fn checked_add(self, d: SimDuration) -> Option<SimTime> {
        self.0.checked_add(d.0).map(SimTime)
    }
}

impl SimDuration {
    pub const ZERO: SimDuration = SimDuration(0);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimDuration(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub const fn from_nanos(ns: u64) -> Self {
        SimDuration(ns * TICKS_PER_NS)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimDuration(us * TICKS_PER_US)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimDuration(ms * TICKS_PER_MS)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimDuration(s * TICKS_PER_SEC)
    }

    /// Fractional nanoseconds, rounded to the nearest tick (e.g. 51.2 ns -> 512 ticks).
    pub fn from_nanos_f64(ns: f64) -> Self {
        assert!(ns >= 0.0 && ns.is_finite(), "duration must be finite and >= 0");
        SimDuration((ns * TICKS_PER_NS as f64).round() as u64)
    }

    pub fn from_millis_f64(ms: f64) -> Self {
        Self::from_nanos_f64(ms * 1.0e6)
    }

    pub fn from_secs_f64(s: f64) -> Self {
        SimDuration(secs_f64_to_ticks(s))
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_SEC as f64
    }

    pub fn as_nanos_f64(self) -> f64 {
        self.0 as f64 / TICKS_PER_NS as f64
    }

    pub fn as_millis_f64(self) -> f64 {
        self.as_nanos_f64() / 1.0e6
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn saturating_sub(self, other: SimDuration) -> SimDuration {
        SimDuration(self.0.saturating_sub(other.0))
    }
}

fn secs_f64_to_ticks(s: f64) -> u64 {
    assert!(s >= 0.0 && s.is_finite(), "time must be finite and >= 0");
    let ticks = s * TICKS_PER_SEC as f64;
    assert!(
        ticks <= u64::MAX as f64,
        "time {s} s does not fit the simulation clock"
    );
    ticks.round() as u64
}

impl Add<SimDuration> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimDuration) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign<SimDuration> for SimTime {
    fn add_assign(&mut self, rhs: SimDuration) {
        self.0 += rhs.0;
    }
}

impl Sub<SimDuration> for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimDuration) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl Add for SimDuration {
    type Output = SimDuration;
    fn add(self, rhs: SimDuration) -> SimDuration {
        SimDuration(self.0 + rhs.0)
    }
}

impl AddAssign for SimDuration {
    fn add_assign(&mut self, rhs: SimDuration) {
        self.0 += rhs.0;
    }
}

impl Sub for SimDuration {
    type Output = SimDuration;
    fn sub(self, rhs: SimDuration) -> SimDuration {
        SimDuration(self.0 - rhs.0)
    }
}

impl Mul<u64> for SimDuration {
    type Output = SimDuration;
    fn mul(self, rhs: u64) -> SimDuration {
        SimDuration(self.0 * rhs)
    }
}

impl Div<u64> for SimDuration {
    type Output = SimDuration;
    fn div(self, rhs: u64) -> SimDuration {
        SimDuration(self.0 / rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs_f64())
    }
}

impl fmt::Display for SimDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ns = self.as_nanos_f64();
        if ns < 1.0e3 {
            write!(f, "{ns:.1}ns")
        } else if ns < 1.0e6 {
            write!(f, "{:.3}us", ns / 1.0e3)
        } else if ns < 1.0e9 {
            write!(f, "{:.3}ms", ns / 1.0e6)
        } else {
            write!(f, "{:.3}s", ns / 1.0e9)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_time_is_exact() {
        // 64 bytes at 10 Gb/s: 51.2 ns must not round.
        assert_eq!(SimDuration::from_nanos_f64(51.2).ticks(), 512);
        assert_eq!(SimDuration::from_nanos_f64(500.0).ticks(), 5_000);
    }

    #[test]
    fn fleet_horizon_fits() {
        // 30_000 hours of simulated time must fit the clock.
        let horizon = SimDuration::from_secs(30_000 * 3600);
        assert!(horizon.ticks() < u64::MAX / 2);
    }

    #[test]
    fn since_and_arithmetic() {
        let a = SimTime::from_millis(5);
        let b = a + SimDuration::from_micros(250);
        assert_eq!(b.since(a), SimDuration::from_micros(250));
        assert_eq!(b.since(b), SimDuration::ZERO);
    }
}
