//! Lockstep simulation clock.
//!
//! Sim time is always `step_index * dt`; it is never accumulated, so every
//! subsystem sharing a clock sees bit-identical timestamps.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::time::Duration;

/// Wall-clock pacing target relative to sim time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RealtimeFactor {
    /// Sim seconds per wall second.
    Bounded(f64),
    /// Run as fast as possible.
    #[default]
    Unbounded,
}

impl RealtimeFactor {
    pub fn is_valid(&self) -> bool {
        match self {
            RealtimeFactor::Bounded(f) => f.is_finite() && *f > 0.0,
            RealtimeFactor::Unbounded => true,
        }
    }
}

impl fmt::Display for RealtimeFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealtimeFactor::Bounded(x) => write!(f, "{x}"),
            RealtimeFactor::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl std::str::FromStr for RealtimeFactor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unbounded" {
            return Ok(RealtimeFactor::Unbounded);
        }
        match s.parse::<f64>() {
            Ok(f) if f.is_finite() && f > 0.0 => Ok(RealtimeFactor::Bounded(f)),
            _ => Err(format!("expected a positive number or \"unbounded\", got {s:?}")),
        }
    }
}

// Wire form: a positive number or the string "unbounded".
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RtfRepr {
    Factor(f64),
    Word(String),
}

impl Serialize for RealtimeFactor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RealtimeFactor::Bounded(f) => RtfRepr::Factor(*f),
            RealtimeFactor::Unbounded => RtfRepr::Word("unbounded".into()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RealtimeFactor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RtfRepr::deserialize(d)? {
            RtfRepr::Factor(f) if f.is_finite() && f > 0.0 => Ok(RealtimeFactor::Bounded(f)),
            RtfRepr::Factor(f) => Err(serde::de::Error::custom(format!(
                "realtime factor must be positive, got {f}"
            ))),
            RtfRepr::Word(w) if w == "unbounded" => Ok(RealtimeFactor::Unbounded),
            RtfRepr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a number or \"unbounded\", got {w:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    dt: f64,
    step_index: u64,
    pub realtime_factor: RealtimeFactor,
}

impl SimClock {
    /// Panics if `dt` is not a positive finite number.
    pub fn new(dt: f64, realtime_factor: RealtimeFactor) -> Self {
        assert!(dt.is_finite() && dt > 0.0, "clock step must be positive");
        Self {
            dt,
            step_index: 0,
            realtime_factor,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn t(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    /// Sim time at an arbitrary step index of this clock.
    pub fn time_at(&self, step_index: u64) -> f64 {
        step_index as f64 * self.dt
    }

    /// Moves to the next step and returns the advised wall delay before the
    /// following one. The delay is advisory only.
    pub fn advance(&mut self) -> Duration {
        self.step_index += 1;
        self.step_delay()
    }

    /// Wall time one step should take at the configured factor.
    pub fn step_delay(&self) -> Duration {
        match self.realtime_factor {
            RealtimeFactor::Bounded(f) => Duration::from_secs_f64(self.dt / f),
            RealtimeFactor::Unbounded => Duration::ZERO,
        }
    }

    /// Whether a subsystem with the given decimation (physics steps per
    /// firing) is due at the current step.
    pub fn is_due(&self, decimation: u64) -> bool {
        self.step_index % decimation == 0
    }
}

/// Number of physics steps per firing of a subsystem running at `rate_hz`,
/// or `None` if the rate does not divide the physics rate evenly.
pub fn decimation(dt_physics: f64, rate_hz: f64) -> Option<u64> {
    if !(rate_hz.is_finite() && rate_hz > 0.0 && dt_physics > 0.0) {
        return None;
    }
    let ratio = 1.0 / (dt_physics * rate_hz);
    let n = ratio.round();
    if n >= 1.0 && (ratio - n).abs() <= 1e-9 * n {
        Some(n as u64)
    } else {
        None
    }
}

/// Sleeps so that sim time tracks wall time at a realtime factor.
///
/// Pacing is measured against a reference instant rather than per step, so
/// sleep granularity does not accumulate.
#[derive(Debug)]
pub struct Pacer {
    start: std::time::Instant,
    start_sim: f64,
}

impl Pacer {
    pub fn new(t_sim: f64) -> Self {
        Self {
            start: std::time::Instant::now(),
            start_sim: t_sim,
        }
    }

    /// Restarts the reference point, e.g. after a pause or a factor change.
    pub fn reset(&mut self, t_sim: f64) {
        *self = Self::new(t_sim);
    }

    /// Blocks until wall time catches up with `t_sim`.
    pub fn pace(&self, t_sim: f64, factor: RealtimeFactor) {
        if let RealtimeFactor::Bounded(f) = factor {
            let target = Duration::from_secs_f64((t_sim - self.start_sim).max(0.0) / f);
            let elapsed = self.start.elapsed();
            if target > elapsed {
                std::thread::sleep(target - elapsed);
            }
        }
    }
}
