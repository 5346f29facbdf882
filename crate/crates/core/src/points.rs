use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A score amount held as an integer number of tenths, so `+0.5` and `-1`
/// add up without drift.
///
/// Serializes as a JSON number with at most one decimal place.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Points(i64);

impl Points {
    pub const ZERO: Points = Points(0);

    pub const fn from_tenths(tenths: i64) -> Self {
        Points(tenths)
    }

    pub const fn whole(points: i64) -> Self {
        Points(points * 10)
    }

    pub const fn tenths(self) -> i64 {
        self.0
    }

    /// Rounds to the nearest tenth, ties away from zero. `None` for
    /// non-finite input.
    pub fn from_f64(value: f64) -> Option<Self> {
        if !value.is_finite() {
            return None;
        }
        let tenths = (value * 10.0).round();
        if tenths.abs() > i64::MAX as f64 / 2.0 {
            return None;
        }
        Some(Points(tenths as i64))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl fmt::Display for Points {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{}", abs / 10, abs % 10)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid points value {0:?}")]
pub struct ParsePointsError(String);

impl FromStr for Points {
    type Err = ParsePointsError;

    /// Accepts at most one fractional digit, e.g. `4`, `-2.5`, `0.5`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParsePointsError(s.to_owned());
        let text = s.trim();
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text.strip_prefix('+').unwrap_or(text)),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, "0"));
        if whole.is_empty() || frac.len() != 1 {
            return Err(err());
        }
        let whole: i64 = whole.parse().map_err(|_| err())?;
        let frac: i64 = frac.parse().map_err(|_| err())?;
        let tenths = whole * 10 + frac;
        Ok(Points(if negative { -tenths } else { tenths }))
    }
}

impl Serialize for Points {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Points {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = f64::deserialize(deserializer)?;
        let points = Points::from_f64(value)
            .ok_or_else(|| serde::de::Error::custom("points must be finite"))?;
        if (points.as_f64() - value).abs() > 1e-9 {
            return Err(serde::de::Error::custom(format!(
                "{value} is finer than 0.1-point resolution"
            )));
        }
        Ok(points)
    }
}

impl Add for Points {
    type Output = Points;
    fn add(self, rhs: Points) -> Points {
        Points(self.0 + rhs.0)
    }
}

impl AddAssign for Points {
    fn add_assign(&mut self, rhs: Points) {
        self.0 += rhs.0;
    }
}

impl Sub for Points {
    type Output = Points;
    fn sub(self, rhs: Points) -> Points {
        Points(self.0 - rhs.0)
    }
}

impl Neg for Points {
    type Output = Points;
    fn neg(self) -> Points {
        Points(-self.0)
    }
}

impl Mul<i64> for Points {
    type Output = Points;
    fn mul(self, rhs: i64) -> Points {
        Points(self.0 * rhs)
    }
}

impl Sum for Points {
    fn sum<I: Iterator<Item = Points>>(iter: I) -> Points {
        iter.fold(Points::ZERO, Add::add)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        assert_eq!(Points::from_tenths(45).to_string(), "4.5");
        assert_eq!(Points::from_tenths(-25).to_string(), "-2.5");
        assert_eq!(Points::from_tenths(-5).to_string(), "-0.5");
        assert_eq!(Points::whole(5).to_string(), "5.0");
        assert_eq!("-0.5".parse::<Points>().unwrap(), Points::from_tenths(-5));
        assert_eq!("7".parse::<Points>().unwrap(), Points::whole(7));
        assert!("0.25".parse::<Points>().is_err());
        assert!("".parse::<Points>().is_err());
    }

    #[test]
    fn json_is_decimal_number() {
        assert_eq!(serde_json::to_string(&Points::from_tenths(-25)).unwrap(), "-2.5");
        assert_eq!(serde_json::to_string(&Points::whole(5)).unwrap(), "5.0");
        let p: Points = serde_json::from_str("0.5").unwrap();
        assert_eq!(p, Points::from_tenths(5));
        assert!(serde_json::from_str::<Points>("0.25").is_err());
    }

    #[test]
    fn sums_are_exact() {
        let total: Points = std::iter::repeat(Points::from_tenths(1)).take(10_000).sum();
        assert_eq!(total, Points::whole(1000));
    }
}
