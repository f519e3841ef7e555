use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CoverAttempt;
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::sample_grid;
use crate::spacing::PlacedFamily;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjointnessCheck {
    pub a: u64,
    pub d: u64,
    pub disjoint: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessCertificate {
    pub witness: u64,
    pub checks: Vec<DisjointnessCheck>,
}

impl WitnessCertificate {
    /// Re-check every listed fact and that no stored `J_d`, `d < witness`, was skipped.
    pub fn replay(&self, witness_interval: &Interval, cover: &CoverAttempt) -> bool {
        let listed: Vec<u64> = self.checks.iter().map(|c| c.d).collect();
        let stored: Vec<u64> = cover.entries_between(0, self.witness).map(|(d, _)| d).collect();
        listed == stored
            && self.checks.iter().all(|c| {
                c.a == self.witness && c.disjoint && cover.get(c.d).is_some_and(|j| !j.intersects(witness_interval))
            })
    }
}

/// Whether the window's lower density estimate of `D` is below `d(A)/4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HypothesisRecord {
    pub d_lower_estimate: Rational,
    pub threshold: Option<Rational>,
    pub holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessReport {
    pub certificate: WitnessCertificate,
    pub hypothesis: HypothesisRecord,
    pub scanned: u64,
}

const HYPOTHESIS_SAMPLES: u64 = 1024;

/// Least placed `a` whose interval misses every `J_d` with `d < a`.
///
/// Only `a <= window_end + 1` are eligible since larger ones depend on
/// indices the cover does not store.
pub fn corollary_witness(placed: &PlacedFamily, cover: &CoverAttempt) -> Result<WitnessReport> {
    let m = placed.tree().base_exponent();
    if let Some(min) = cover.index_set().min() {
        if min < m {
            return Err(Error::Precondition(format!("D contains {min} < m = {m}")));
        }
    }
    for (d, j) in cover.intervals() {
        if !cover.index_set().contains(*d) {
            return Err(Error::Validation(format!("J_{d} is stored but {d} is not in D")));
        }
        if j.length() > Rational::inv_pow7(d + 1) {
            return Err(Error::Validation(format!("|J_{d}| exceeds 7^-{}", d + 1)));
        }
    }

    let hypothesis = hypothesis_record(placed, cover);
    let limit = cover.window_end().saturating_add(1);
    let candidates: Vec<usize> = (0..placed.len()).take_while(|&i| placed.placements()[i].a <= limit).collect();
    let found = candidates.par_iter().find_first(|&&pos| {
        let p = &placed.placements()[pos];
        cover.entries_between(0, p.a).all(|(_, j)| !j.intersects(&p.interval))
    });
    let Some(&pos) = found else {
        return Err(Error::WindowInsufficient(format!(
            "no placed a <= {limit} avoids the earlier cover intervals ({} candidates)",
            candidates.len()
        )));
    };
    let a = placed.placements()[pos].a;
    let checks = cover.entries_between(0, a).map(|(d, _)| DisjointnessCheck { a, d, disjoint: true }).collect();
    Ok(WitnessReport { certificate: WitnessCertificate { witness: a, checks }, hypothesis, scanned: pos as u64 + 1 })
}

/// Windowed lower-density estimate of `D` against `d(A)/4`.
pub fn hypothesis_record(placed: &PlacedFamily, cover: &CoverAttempt) -> HypothesisRecord {
    let end = cover.window_end().max(1);
    let d = cover.index_set();
    let d_lower = sample_grid(end, HYPOTHESIS_SAMPLES.min(end))
        .into_iter()
        .map(|j| Rational::new(d.count_prefix(j), j + 1).expect("positive"))
        .min()
        .unwrap_or_else(Rational::zero);
    let threshold = placed.index_set().density_exact().ok().map(|x| &x * &Rational::frac(1, 4));
    let holds = threshold.as_ref().map(|t| &d_lower < t);
    HypothesisRecord { d_lower_estimate: d_lower, threshold, holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Constraint;
    use crate::omega::OmegaSet;
    use crate::spacing::{build_k_hierarchy, place_intervals};

    fn family(depth: u32) -> PlacedFamily {
        let tree = build_k_hierarchy(&Interval::new(Rational::zero(), Rational::one()).unwrap(), 0, depth).unwrap();
        let count = tree.terminal_count() as usize;
        place_intervals(&tree, &OmegaSet::progression(1, 1), count).unwrap()
    }

    fn brute(placed: &PlacedFamily, cover: &CoverAttempt) -> Option<u64> {
        placed.placements().iter().find_map(|p| {
            let ok = p.a <= cover.window_end() + 1
                && cover.intervals().iter().filter(|(d, _)| **d < p.a).all(|(_, j)| !j.intersects(&p.interval));
            ok.then_some(p.a)
        })
    }

    #[test]
    fn empty_cover_gives_first_index() {
        let p = family(2);
        let c = CoverAttempt::empty(Constraint::geometric(Rational::frac(1, 7)), 10);
        let w = corollary_witness(&p, &c).unwrap();
        assert_eq!(w.certificate.witness, 1);
        assert!(w.certificate.checks.is_empty());
    }

    #[test]
    fn hitting_first_intervals_pushes_witness() {
        let p = family(3);
        // J_d sits on I_(d+1) for d < 6, so a <= 6 are all hit by an earlier index
        let entries: Vec<(u64, Interval)> = (0..6)
            .map(|d| (d, Interval::with_length(p.interval(d + 1).unwrap().lo().clone(), &Rational::inv_pow7(d + 1))))
            .collect();
        let c = CoverAttempt::new(OmegaSet::all(), Constraint::geometric(Rational::frac(1, 7)), 20, entries);
        let w = corollary_witness(&p, &c).unwrap();
        assert_eq!(Some(w.certificate.witness), brute(&p, &c));
        assert_eq!(w.certificate.witness, 7);
        assert!(w.certificate.replay(p.interval(7).unwrap(), &c));
        assert_eq!(w.certificate.checks.len(), 6);
    }

    #[test]
    fn narrow_window_is_an_error() {
        let p = family(2);
        let entries: Vec<(u64, Interval)> = (0..3)
            .map(|d| (d, Interval::with_length(p.interval(d + 1).unwrap().lo().clone(), &Rational::inv_pow7(d + 1))))
            .collect();
        let c = CoverAttempt::new(OmegaSet::all(), Constraint::geometric(Rational::frac(1, 7)), 2, entries);
        assert!(matches!(corollary_witness(&p, &c), Err(Error::WindowInsufficient(_))));
    }

    #[test]
    fn preconditions() {
        let root = Interval::new(Rational::zero(), Rational::frac(1, 7)).unwrap();
        let tree = build_k_hierarchy(&root, 1, 1).unwrap();
        let p = place_intervals(&tree, &OmegaSet::progression(2, 1), 4).unwrap();
        let c = CoverAttempt::new(OmegaSet::all(), Constraint::geometric(Rational::frac(1, 7)), 3, []);
        assert!(matches!(corollary_witness(&p, &c), Err(Error::Precondition(_))));
        let long = CoverAttempt::new(
            OmegaSet::progression(1, 1),
            Constraint::geometric(Rational::frac(1, 7)),
            3,
            [(1, Interval::new(Rational::zero(), Rational::frac(1, 48)).unwrap())],
        );
        assert!(matches!(corollary_witness(&p, &long), Err(Error::Validation(_))));
    }

    #[test]
    fn tampered_certificate_fails_replay() {
        let p = family(3);
        let entries = [(0u64, Interval::point(p.interval(1).unwrap().lo().clone()))];
        let c = CoverAttempt::new(OmegaSet::all(), Constraint::geometric(Rational::frac(1, 7)), 5, entries);
        let mut w = corollary_witness(&p, &c).unwrap().certificate;
        assert_eq!(w.witness, 2);
        w.checks.clear();
        assert!(!w.replay(p.interval(2).unwrap(), &c));
        w.witness = 1;
        w.checks.push(DisjointnessCheck { a: 1, d: 0, disjoint: true });
        assert!(!w.replay(p.interval(1).unwrap(), &c));
    }
}
