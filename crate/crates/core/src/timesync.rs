//! Four-timestamp clock exchange, offset estimation and bid timestamping.
//!
//! Two estimates are exposed. [`paper_error_bound`] is half the return-leg
//! duration, the quantity used to report how far an asymmetric delay can
//! skew a reading. [`standard_offset`] is the usual NTP offset and is the one
//! applied when correcting a clock.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TimeError {
    #[error("client timestamps out of order: t1 = {t1} > t4 = {t4}")]
    ClientOrder { t1: i64, t4: i64 },
    #[error("server timestamps out of order: t2 = {t2} > t3 = {t3}")]
    ServerOrder { t2: i64, t3: i64 },
    #[error("clock has not been initialized")]
    Uninitialized,
    #[error("corrected time {0} ms is negative")]
    Negative(i64),
    #[error("cannot parse timestamp {0:?}")]
    Parse(String),
}

/// A duration with half-millisecond resolution, stored as a count of halves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfMillis(i64);

impl HalfMillis {
    pub const ZERO: Self = Self(0);

    pub fn from_millis(ms: i64) -> Self {
        Self(ms * 2)
    }

    pub fn halves(self) -> i64 {
        self.0
    }

    /// Whole milliseconds, if the value has no half part.
    pub fn whole_millis(self) -> Option<i64> {
        (self.0 % 2 == 0).then_some(self.0 / 2)
    }
}

impl fmt::Display for HalfMillis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.whole_millis() {
            Some(ms) => write!(f, "{ms}"),
            None => {
                let sign = if self.0 < 0 { "-" } else { "" };
                write!(f, "{sign}{}.5", self.0.unsigned_abs() / 2)
            }
        }
    }
}

/// Client send, server receive, server send, client receive; milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockSample {
    pub t1: i64,
    pub t2: i64,
    pub t3: i64,
    pub t4: i64,
}

impl ClockSample {
    pub fn new(t1: i64, t2: i64, t3: i64, t4: i64) -> Result<Self, TimeError> {
        if t1 > t4 {
            return Err(TimeError::ClientOrder { t1, t4 });
        }
        if t2 > t3 {
            return Err(TimeError::ServerOrder { t2, t3 });
        }
        Ok(Self { t1, t2, t3, t4 })
    }
}

/// `(t4 - t3) / 2`.
pub fn paper_error_bound(s: &ClockSample) -> HalfMillis {
    HalfMillis(s.t4 - s.t3)
}

/// `((t2 - t1) + (t3 - t4)) / 2`.
pub fn standard_offset(s: &ClockSample) -> HalfMillis {
    HalfMillis((s.t2 - s.t1) + (s.t3 - s.t4))
}

/// A bid timestamp in whole milliseconds, rendered as decimal seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BidTimestamp(u64);

impl From<BidTimestamp> for String {
    fn from(t: BidTimestamp) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for BidTimestamp {
    type Error = TimeError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl BidTimestamp {
    pub fn from_millis(ms: u64) -> Self {
        Self(ms)
    }

    pub fn millis(self) -> u64 {
        self.0
    }
}

impl fmt::Display for BidTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

impl FromStr for BidTimestamp {
    type Err = TimeError;

    /// Parses decimal seconds with at most three fractional digits.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TimeError::Parse(s.to_string());
        let t = s.trim();
        let (whole, frac) = t.split_once('.').unwrap_or((t, ""));
        if whole.is_empty() || frac.len() > 3 || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let secs: u64 = whole.parse().map_err(|_| err())?;
        let mut ms = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            ms += u64::from(b - b'0') * 10u64.pow(2 - i as u32);
        }
        secs.checked_mul(1000)
            .and_then(|x| x.checked_add(ms))
            .map(Self)
            .ok_or_else(err)
    }
}

/// One party's view of time: the shared logical clock plus a fixed skew,
/// corrected by the last computed offset.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartyClock {
    skew_ms: Option<i64>,
    offset: HalfMillis,
}

impl PartyClock {
    pub fn new(skew_ms: i64) -> Self {
        Self {
            skew_ms: Some(skew_ms),
            offset: HalfMillis::ZERO,
        }
    }

    pub fn uninitialized() -> Self {
        Self::default()
    }

    /// Raw local reading at logical time `now_ms`.
    pub fn local(&self, now_ms: u64) -> Result<i64, TimeError> {
        let skew = self.skew_ms.ok_or(TimeError::Uninitialized)?;
        Ok(now_ms as i64 + skew)
    }

    pub fn offset(&self) -> HalfMillis {
        self.offset
    }

    pub fn set_offset(&mut self, offset: HalfMillis) {
        self.offset = offset;
    }

    /// Adopts the standard offset of a completed exchange.
    pub fn synchronize(&mut self, sample: &ClockSample) {
        self.offset = standard_offset(sample);
    }
}

/// Local reading plus offset, floored to whole milliseconds.
pub fn timestamp_now(clock: &PartyClock, now_ms: u64) -> Result<BidTimestamp, TimeError> {
    let local = clock.local(now_ms)?;
    let corrected = (2 * local + clock.offset.halves()).div_euclid(2);
    if corrected < 0 {
        return Err(TimeError::Negative(corrected));
    }
    Ok(BidTimestamp(corrected as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t1: i64, t2: i64, t3: i64, t4: i64) -> ClockSample {
        ClockSample::new(t1, t2, t3, t4).unwrap()
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(paper_error_bound(&sample(0, 1000, 5000, 35000)), HalfMillis::from_millis(15000));
        assert_eq!(paper_error_bound(&sample(0, 0, 700, 700)), HalfMillis::ZERO);
        assert_eq!(paper_error_bound(&sample(0, 1000, 2000, 3000)), HalfMillis::from_millis(500));
        assert_eq!(paper_error_bound(&sample(0, 0, 0, 3)).to_string(), "1.5");
    }

    #[test]
    fn standard_offset_examples() {
        assert_eq!(standard_offset(&sample(0, 1000, 5000, 35000)), HalfMillis::from_millis(-14500));
        assert_eq!(standard_offset(&sample(0, 1000, 2000, 3000)), HalfMillis::ZERO);
        assert_eq!(standard_offset(&sample(0, 6000, 7000, 3000)), HalfMillis::from_millis(5000));
        assert_eq!(HalfMillis(-3).to_string(), "-1.5");
    }

    #[test]
    fn sample_order_is_checked() {
        assert_eq!(
            ClockSample::new(10, 0, 0, 5),
            Err(TimeError::ClientOrder { t1: 10, t4: 5 })
        );
        assert_eq!(
            ClockSample::new(0, 9, 8, 20),
            Err(TimeError::ServerOrder { t2: 9, t3: 8 })
        );
    }

    #[test]
    fn timestamp_examples() {
        let clock = PartyClock::new(0);
        assert_eq!(timestamp_now(&clock, 2826).unwrap().to_string(), "2.826");
        assert_eq!(timestamp_now(&clock, 0).unwrap().to_string(), "0.000");
        let mut skewed = PartyClock::new(0);
        skewed.set_offset(HalfMillis::from_millis(-14500));
        assert_eq!(timestamp_now(&skewed, 10_000), Err(TimeError::Negative(-4500)));
        assert_eq!(
            timestamp_now(&PartyClock::uninitialized(), 5),
            Err(TimeError::Uninitialized)
        );
    }

    #[test]
    fn synchronize_corrects_skew() {
        // client runs 5 s behind the server; symmetric 1 s legs
        let mut clock = PartyClock::new(-5000);
        let s = sample(-5000, 1000, 1000, -3000);
        clock.synchronize(&s);
        assert_eq!(clock.offset(), HalfMillis::from_millis(5000));
        assert_eq!(timestamp_now(&clock, 2000).unwrap().millis(), 2000);
    }

    #[test]
    fn timestamp_parsing() {
        assert_eq!("2.826".parse::<BidTimestamp>().unwrap().millis(), 2826);
        assert_eq!("2.9".parse::<BidTimestamp>().unwrap().millis(), 2900);
        assert_eq!("3".parse::<BidTimestamp>().unwrap().millis(), 3000);
        for bad in ["", ".5", "1.2345", "-1.0", "a.b", "1.x"] {
            assert!(bad.parse::<BidTimestamp>().is_err(), "{bad}");
        }
    }
}
