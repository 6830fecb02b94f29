//! Replay-timeline instants and millisecond durations.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Milliseconds since the replay epoch.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn millis(self) -> u64 {
        self.0
    }

    /// `self + offset` as a signed quantity, so that negative offsets never wrap.
    pub fn shifted(self, offset: i64) -> i128 {
        self.0 as i128 + offset as i128
    }

    pub fn saturating_sub(self, other: Timestamp) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add<u64> for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: u64) -> Timestamp {
        Timestamp(self.0.saturating_add(rhs))
    }
}

impl Sub<Timestamp> for Timestamp {
    type Output = i64;
    fn sub(self, rhs: Timestamp) -> i64 {
        self.0 as i64 - rhs.0 as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid duration `{0}` (expected e.g. 500ms, 60s, 3min)")]
pub struct DurationError(pub String);

/// Parses `500ms`, `60s`, `1.5s`, `3min`, `1min30s` or a bare integer (milliseconds).
pub fn parse_duration(text: &str) -> Result<i64, DurationError> {
    let err = || DurationError(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Ok(ms) = s.parse::<i64>() {
        return Ok(ms);
    }
    let (sign, s) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let bytes = s.as_bytes();
    let mut total: f64 = 0.0;
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if start == i {
            return Err(err());
        }
        let number: f64 = s[start..i].parse().map_err(|_| err())?;
        let unit_start = i;
        while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
            i += 1;
        }
        let factor = match &s[unit_start..i] {
            "ms" => 1.0,
            "s" => 1_000.0,
            "min" | "m" => 60_000.0,
            "h" => 3_600_000.0,
            _ => return Err(err()),
        };
        total += number * factor;
    }
    if !total.is_finite() || total > i64::MAX as f64 {
        return Err(err());
    }
    Ok((sign * total).round() as i64)
}

/// Renders a duration with the largest unit that represents it exactly.
pub fn format_duration(ms: i64) -> String {
    if ms != 0 && ms % 60_000 == 0 {
        format!("{}min", ms / 60_000)
    } else if ms != 0 && ms % 1_000 == 0 {
        format!("{}s", ms / 1_000)
    } else {
        format!("{ms}ms")
    }
}
