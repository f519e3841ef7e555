use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use super::Rational;
use crate::error::Error;

/// Closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, Error> {
        if lo > hi {
            return Err(Error::Precondition(format!("interval endpoints out of order: [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// `[lo, lo + len]`; `len` must be non-negative.
    pub fn with_length(lo: Rational, len: &Rational) -> Self {
        assert!(!len.is_negative(), "negative interval length");
        let hi = &lo + len;
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    /// Closed semantics: touching endpoints intersect.
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Zero when the intervals meet, otherwise the gap between nearest endpoints.
    pub fn distance(&self, other: &Interval) -> Rational {
        if self.hi < other.lo {
            &other.lo - &self.hi
        } else if other.hi < self.lo {
            &self.lo - &other.hi
        } else {
            Rational::zero()
        }
    }

    pub fn shift(&self, r: &Rational) -> Interval {
        Interval {
            lo: &self.lo + r,
            hi: &self.hi + r,
        }
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Deserialize)]
struct IntervalRepr {
    lo: Rational,
    hi: Rational,
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = IntervalRepr::deserialize(d)?;
        Interval::new(repr.lo, repr.hi).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: (i64, i64), b: (i64, i64)) -> Interval {
        Interval::new(Rational::frac(a.0, a.1), Rational::frac(b.0, b.1)).unwrap()
    }

    #[test]
    fn length_examples() {
        assert_eq!(iv((0, 1), (1, 7)).length(), Rational::frac(1, 7));
        assert_eq!(iv((4, 49), (5, 49)).length(), Rational::frac(1, 49));
        assert_eq!(iv((3, 1), (3, 1)).length(), Rational::zero());
    }

    #[test]
    fn intersects_examples() {
        assert!(iv((0, 1), (1, 7)).intersects(&iv((1, 7), (2, 7))));
        assert!(!iv((0, 1), (1, 7)).intersects(&iv((2, 7), (3, 7))));
        assert!(iv((0, 1), (1, 1)).intersects(&iv((1, 2), (2, 1))));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(iv((0, 1), (1, 7)).distance(&iv((2, 7), (3, 7))), Rational::frac(1, 7));
        assert_eq!(iv((0, 1), (1, 1)).distance(&iv((1, 2), (2, 1))), Rational::zero());
        assert_eq!(iv((0, 1), (1, 49)).distance(&iv((6, 49), (7, 49))), Rational::frac(5, 49));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(iv((0, 1), (1, 7)).shift(&Rational::frac(1, 2)), iv((1, 2), (9, 14)));
        assert_eq!(iv((0, 1), (1, 7)).shift(&Rational::zero()), iv((0, 1), (1, 7)));
        assert_eq!(iv((4, 49), (5, 49)).shift(&Rational::frac(3, 7)), iv((25, 49), (26, 49)));
    }

    #[test]
    fn rejects_reversed_endpoints() {
        assert!(Interval::new(Rational::one(), Rational::zero()).is_err());
        let bad = r#"{"lo":{"num":"1","den":"1"},"hi":{"num":"0","den":"1"}}"#;
        assert!(serde_json::from_str::<Interval>(bad).is_err());
    }
}
