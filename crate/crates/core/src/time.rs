//! Simulation clock and byte units.
//!
//! Time is kept as integer nanoseconds so that event ordering, panic
//! thresholds and partial-transfer byte counts are exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

pub const KIB: u64 = 1 << 10;
pub const MIB: u64 = 1 << 20;

const NANOS_PER_SEC: f64 = 1e9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    /// Rounds to the nearest nanosecond. Negative or non-finite input is a
    /// caller bug and saturates to zero.
    pub fn from_secs(s: f64) -> SimTime {
        if s.is_finite() && s > 0.0 {
            SimTime((s * NANOS_PER_SEC).round() as u64)
        } else {
            SimTime::ZERO
        }
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC
    }

    pub fn nanos(self) -> u64 {
        self.0
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// Time needed to move `bytes` at `rate` bytes per second, rounded up.
    pub fn transfer(bytes: u64, rate: u64) -> SimTime {
        let num = bytes as u128 * 1_000_000_000u128;
        let rate = rate.max(1) as u128;
        SimTime(num.div_ceil(rate) as u64)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(rhs.0))
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        *self = *self + rhs;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.as_secs())
    }
}
