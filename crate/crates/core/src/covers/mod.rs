//! Cover attempts `(J_d)_{d∈D}`, their validation, coverage checks, the
//! least-witness search against a placed family, and seeded adversaries.

mod adversary;
mod region;
mod validate;
mod witness;

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::exact::{Interval, Rational};
use crate::omega::OmegaSet;

pub use adversary::{adversary_generate, trial_rng, AdversaryParams, Budget, Strategy};
pub use region::{covers_region, CoverageResult};
pub use validate::{validate, IndexStatus, IndexValidation, ValidationReport, DEFAULT_PRECISION_CAP};
pub use witness::{corollary_witness, hypothesis_record, DisjointnessCheck, HypothesisRecord, WitnessCertificate, WitnessReport};

/// Length-constraint family of a cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Constraint {
    /// `|J_d| <= eps^(d+1)`
    Geometric { eps: Rational },
    /// `|J_d| <= eps^ln(d+2)`
    Logarithmic { eps: Rational },
}

impl Constraint {
    pub fn geometric(eps: Rational) -> Self {
        Constraint::Geometric { eps }
    }

    pub fn logarithmic(eps: Rational) -> Self {
        Constraint::Logarithmic { eps }
    }

    pub fn eps(&self) -> &Rational {
        match self {
            Constraint::Geometric { eps } | Constraint::Logarithmic { eps } => eps,
        }
    }

    /// A rational length that always satisfies the bound at index `d` when `eps < 1`.
    pub fn safe_length(&self, d: u64) -> Rational {
        match self {
            Constraint::Geometric { eps } => eps.pow(d + 1),
            Constraint::Logarithmic { eps } => eps.pow(crate::exact::log::ln_ceiling(d + 2)),
        }
    }
}

/// A finite window of an indexed interval sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverAttempt {
    index_set: OmegaSet,
    constraint: Constraint,
    window_end: u64,
    intervals: BTreeMap<u64, Interval>,
}

impl CoverAttempt {
    pub fn new(
        index_set: OmegaSet,
        constraint: Constraint,
        window_end: u64,
        intervals: impl IntoIterator<Item = (u64, Interval)>,
    ) -> Self {
        CoverAttempt { index_set, constraint, window_end, intervals: intervals.into_iter().collect() }
    }

    /// A cover with no intervals at all.
    pub fn empty(constraint: Constraint, window_end: u64) -> Self {
        Self::new(OmegaSet::empty(), constraint, window_end, [])
    }

    pub fn index_set(&self) -> &OmegaSet {
        &self.index_set
    }

    pub fn constraint(&self) -> &Constraint {
        &self.constraint
    }

    pub fn window_end(&self) -> u64 {
        self.window_end
    }

    pub fn intervals(&self) -> &BTreeMap<u64, Interval> {
        &self.intervals
    }

    pub fn get(&self, d: u64) -> Option<&Interval> {
        self.intervals.get(&d)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Stored `(d, J_d)` with `d <= end`.
    pub fn entries_upto(&self, end: u64) -> impl Iterator<Item = (u64, &Interval)> {
        self.intervals.range(..=end).map(|(d, j)| (*d, j))
    }

    /// Stored `(d, J_d)` with `lo <= d < hi`.
    pub fn entries_between(&self, lo: u64, hi: u64) -> impl Iterator<Item = (u64, &Interval)> {
        self.intervals.range(lo..hi).map(|(d, j)| (*d, j))
    }

    /// The same cover with every index below `lo` dropped.
    pub fn restrict_from(&self, lo: u64) -> CoverAttempt {
        CoverAttempt {
            index_set: self.index_set.restrict_from(lo),
            constraint: self.constraint.clone(),
            window_end: self.window_end,
            intervals: self.intervals.range(lo..).map(|(d, j)| (*d, j.clone())).collect(),
        }
    }

    /// Every `J_d` translated by `r`.
    pub fn shifted(&self, r: &Rational) -> CoverAttempt {
        CoverAttempt {
            intervals: self.intervals.iter().map(|(d, j)| (*d, j.shift(r))).collect(),
            ..self.clone()
        }
    }

    pub fn with_constraint(&self, constraint: Constraint) -> CoverAttempt {
        CoverAttempt { constraint, ..self.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct CoverEntry {
    d: u64,
    #[serde(rename = "J")]
    interval: Interval,
}

#[derive(Serialize, Deserialize)]
struct CoverRepr {
    #[serde(rename = "D")]
    index_set: OmegaSet,
    constraint: Constraint,
    window_end: u64,
    intervals: Vec<CoverEntry>,
}

impl Serialize for CoverAttempt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CoverRepr {
            index_set: self.index_set.clone(),
            constraint: self.constraint.clone(),
            window_end: self.window_end,
            intervals: self.intervals.iter().map(|(d, j)| CoverEntry { d: *d, interval: j.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoverAttempt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = CoverRepr::deserialize(d)?;
        let mut intervals = BTreeMap::new();
        for e in repr.intervals {
            if intervals.insert(e.d, e.interval).is_some() {
                return Err(D::Error::custom(format!("index {} listed twice", e.d)));
            }
        }
        Ok(CoverAttempt { index_set: repr.index_set, constraint: repr.constraint, window_end: repr.window_end, intervals })
    }
}
