use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::placement::PlacedFamily;
use crate::covers::CoverAttempt;
use crate::error::{Error, Result};
use crate::exact::{digits_base7, Digit7Stream, Rational};

/// A shift `r ∈ (0, 1)` with its base-7 prefix relative to a scale `7^-m`.
///
/// `digits` is absent when `r >= 7^-m`, where the prefix is not needed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shift {
    pub value: Rational,
    pub digits: Option<Digit7Stream>,
}

impl Shift {
    pub fn new(value: Rational, m: u64, prefix: usize) -> Result<Shift> {
        if !value.is_positive() || value >= Rational::one() {
            return Err(Error::Precondition(format!("shift {value} is not in (0, 1)")));
        }
        let digits = if value < Rational::inv_pow7(m) { Some(digits_base7(&value, m, prefix)?) } else { None };
        Ok(Shift { value, digits })
    }

    pub fn with_digits(value: Rational, digits: Digit7Stream) -> Result<Shift> {
        if !digits.describes(&value) {
            return Err(Error::Precondition(format!("digit prefix does not describe {value}")));
        }
        Ok(Shift { value, digits: Some(digits) })
    }

    /// Whether `r < 7^-m`; larger shifts move every `r + I_a` off the root.
    pub fn relevant_at(&self, m: u64) -> bool {
        self.value < Rational::inv_pow7(m)
    }

    pub(crate) fn stream_at(&self, m: u64) -> Result<&Digit7Stream> {
        match &self.digits {
            Some(d) if d.m == m => Ok(d),
            Some(d) => Err(Error::Precondition(format!("shift digits are at scale {}, family at {m}", d.m))),
            None => Err(Error::Precondition(format!("shift {} has no digit prefix", self.value))),
        }
    }
}

/// Placed `a <= window` such that every `J_d` meeting `I_a` meets no other placed interval.
pub fn compute_y(placed: &PlacedFamily, cover: &CoverAttempt, window: u64) -> BTreeSet<u64> {
    let crowded = crowded_positions(placed, cover);
    placed
        .placements()
        .iter()
        .enumerate()
        .filter(|(i, p)| p.a <= window && !crowded.contains(i))
        .map(|(_, p)| p.a)
        .collect()
}

fn crowded_positions(placed: &PlacedFamily, cover: &CoverAttempt) -> BTreeSet<usize> {
    cover
        .intervals()
        .par_iter()
        .map(|(_, j)| {
            let hits = placed.hits(j);
            if hits.len() >= 2 {
                hits
            } else {
                Vec::new()
            }
        })
        .flatten()
        .collect::<Vec<usize>>()
        .into_iter()
        .collect()
}

/// Members `a` of `Y` whose cover intervals avoid every shifted copy `r_i + I_a'`.
pub fn compute_z(placed: &PlacedFamily, cover: &CoverAttempt, shifts: &[Shift], window: u64) -> Result<BTreeSet<u64>> {
    let m = placed.tree().base_exponent();
    let needed = placed.tree().depth() as usize + 1;
    for s in shifts.iter().filter(|s| s.relevant_at(m)) {
        let d = s.stream_at(m)?;
        if !d.exact && d.len() < needed {
            return Err(Error::PrefixExhausted { needed, available: d.len() });
        }
    }
    let y = compute_y(placed, cover, window);
    let spoiled: BTreeSet<u64> = cover
        .intervals()
        .par_iter()
        .filter_map(|(_, j)| {
            let hits = placed.hits(j);
            if hits.len() != 1 {
                return None;
            }
            let a = placed.placements()[hits[0]].a;
            let shifted_hit = shifts.iter().any(|s| !placed.hits_shifted(j, &s.value).is_empty());
            (y.contains(&a) && shifted_hit).then_some(a)
        })
        .collect::<Vec<u64>>()
        .into_iter()
        .collect();
    Ok(y.difference(&spoiled).copied().collect())
}

/// Whether the placed interval at `pos` misses every `r_i + I_a'`.
pub fn a_prime_member(placed: &PlacedFamily, pos: usize, shifts: &[Shift]) -> bool {
    let ia = &placed.placements()[pos].interval;
    shifts.iter().all(|s| placed.hits_shifted(ia, &s.value).is_empty())
}
