use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::covers::{covers_region, validate, Constraint, CoverAttempt, CoverageResult, ValidationReport, DEFAULT_PRECISION_CAP};
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::{dyadic_part, OmegaSet};
use crate::spacing::{build_k_hierarchy, depth_for_count, place_intervals, PlacedFamily};

/// Mass of `X` left out by the index cutoff.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationEntry {
    /// level of the missing intervals
    pub level: u32,
    /// index of the enclosing interval one level up; 0 stands for `[0, 1]` at level 0
    pub parent: u64,
    pub first_missing: u64,
    pub step: u64,
    /// `Σ 7^-a` over the missing indices, or the parent's length when `exact` is false
    pub missing_length: Rational,
    pub exact: bool,
}

/// `X_0 ⊃ X_1 ⊃ ... ⊃ X_depth`, each cut at `index_cutoff`.
///
/// Level `i+1` inside `I^i_j` is a spacing family over
/// `A^i_k = 2^(i+k+1) + 2^(i+k+2)·ω` with `k = j/2^i - 1`; level 0 is the
/// spacing family of `[0, 1]` over `ω+1`.
#[derive(Clone, Debug)]
pub struct MicroXApprox {
    depth: u32,
    index_cutoff: u64,
    /// per level, families keyed by parent index (level 0 uses key 0)
    families: Vec<BTreeMap<u64, PlacedFamily>>,
    /// per level, `j ↦ I^i_j`
    intervals: Vec<BTreeMap<u64, Interval>>,
    truncation: Vec<TruncationEntry>,
}

/// Missing tails with exponents beyond this (or twice the cutoff) are bounded by the parent's length.
const EXACT_MASS_FLOOR: u64 = 4096;

/// `Σ_{t>=0} 7^-(first + step·t)`.
fn tail_mass(first: u64, step: u64) -> Rational {
    let ratio = Rational::one() - Rational::inv_pow7(step);
    &Rational::inv_pow7(first) * &ratio.recip()
}

/// Index set of the family inside `I^i_j`, if its parameters fit in 64 bits.
pub fn child_index_set(i: u32, j: u64) -> Option<OmegaSet> {
    let k = j.checked_div(1 << i)?.checked_sub(1)?;
    if j % (1 << i) != 0 || i as u64 + k + 2 >= 64 {
        return None;
    }
    Some(dyadic_part(i, k as u32))
}

fn spacing_family(root: &Interval, m: u64, a: &OmegaSet, count: usize) -> Result<PlacedFamily> {
    let depth = depth_for_count(count);
    let tree = build_k_hierarchy(root, m, depth)?;
    place_intervals(&tree, a, count)
}

pub fn build_x(depth: u32, index_cutoff: u64) -> Result<MicroXApprox> {
    if index_cutoff < 1 || depth >= 63 || index_cutoff < 1u64 << depth {
        return Err(Error::Precondition(format!(
            "cutoff {index_cutoff} leaves level {depth} empty (need at least 2^{depth})"
        )));
    }
    let unit = Interval::new(Rational::zero(), Rational::one()).expect("ordered");
    let level0 = spacing_family(&unit, 0, &OmegaSet::progression(1, 1), index_cutoff as usize)?;
    let mut truncation = vec![TruncationEntry {
        level: 0,
        parent: 0,
        first_missing: index_cutoff + 1,
        step: 1,
        missing_length: tail_mass(index_cutoff + 1, 1),
        exact: true,
    }];
    let mut intervals = vec![level0.placements().iter().map(|p| (p.a, p.interval.clone())).collect::<BTreeMap<_, _>>()];
    let mut families = vec![BTreeMap::from([(0, level0)])];

    let mass_limit = (2 * index_cutoff).max(EXACT_MASS_FLOOR);
    for i in 0..depth {
        let parents: Vec<(u64, Interval)> = intervals[i as usize].iter().map(|(j, iv)| (*j, iv.clone())).collect();
        let built: Vec<(u64, Option<PlacedFamily>, TruncationEntry)> = parents
            .par_iter()
            .map(|(j, root)| {
                let Some(a) = child_index_set(i, *j) else {
                    // the first index 2^(i+k+1) does not fit in 64 bits; bound the mass by the parent
                    let entry = TruncationEntry {
                        level: i + 1,
                        parent: *j,
                        first_missing: u64::MAX,
                        step: u64::MAX,
                        missing_length: root.length(),
                        exact: false,
                    };
                    return Ok((*j, None, entry));
                };
                let prog = a.progressions()[0];
                let count = a.count_prefix(index_cutoff) as usize;
                let first_missing = prog.start + prog.step * count as u64;
                let exact = first_missing.max(prog.step) <= mass_limit;
                let entry = TruncationEntry {
                    level: i + 1,
                    parent: *j,
                    first_missing,
                    step: prog.step,
                    missing_length: if exact { tail_mass(first_missing, prog.step) } else { root.length() },
                    exact,
                };
                if count == 0 {
                    return Ok((*j, None, entry));
                }
                Ok((*j, Some(spacing_family(root, *j, &a, count)?), entry))
            })
            .collect::<Result<_>>()?;
        let mut fams = BTreeMap::new();
        let mut ivs = BTreeMap::new();
        for (j, fam, entry) in built {
            truncation.push(entry);
            if let Some(f) = fam {
                ivs.extend(f.placements().iter().map(|p| (p.a, p.interval.clone())));
                fams.insert(j, f);
            }
        }
        families.push(fams);
        intervals.push(ivs);
    }
    Ok(MicroXApprox { depth, index_cutoff, families, intervals, truncation })
}

impl MicroXApprox {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn index_cutoff(&self) -> u64 {
        self.index_cutoff
    }

    /// `I^i_j`, if materialized.
    pub fn interval(&self, i: u32, j: u64) -> Option<&Interval> {
        self.intervals.get(i as usize)?.get(&j)
    }

    pub fn level(&self, i: u32) -> &BTreeMap<u64, Interval> {
        &self.intervals[i as usize]
    }

    /// The spacing family of level `i` inside `I^(i-1)_parent` (`parent = 0` at level 0).
    pub fn family(&self, i: u32, parent: u64) -> Option<&PlacedFamily> {
        self.families.get(i as usize)?.get(&parent)
    }

    pub fn truncation(&self) -> &[TruncationEntry] {
        &self.truncation
    }

    /// Materialized part of `X_i`, sorted by left endpoint.
    pub fn x_level(&self, i: u32) -> Vec<Interval> {
        let mut v: Vec<Interval> = self.intervals[i as usize].values().cloned().collect();
        v.sort_by(|a, b| a.lo().cmp(b.lo()));
        v
    }

    /// Nesting and length invariants; returns the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (i, ivs) in self.intervals.iter().enumerate() {
            for (j, iv) in ivs {
                if iv.length() != Rational::inv_pow7(*j) {
                    return Err(format!("|I^{i}_{j}| is wrong"));
                }
                if *j % (1 << i) != 0 || *j == 0 {
                    return Err(format!("{j} is not in 2^{i}·(ω+1)"));
                }
            }
        }
        for i in 1..=self.depth as usize {
            for (parent, fam) in &self.families[i] {
                let pi = self.intervals[i - 1].get(parent).ok_or(format!("parent I^{}_{parent} missing", i - 1))?;
                let a = child_index_set(i as u32 - 1, *parent).ok_or("parent index out of range")?;
                for p in fam.placements() {
                    if !a.contains(p.a) {
                        return Err(format!("{} is not in the index set of I^{}_{parent}", p.a, i - 1));
                    }
                    if !pi.contains(&p.interval) {
                        return Err(format!("I^{i}_{} escapes I^{}_{parent}", p.a, i - 1));
                    }
                }
                fam.check_invariants()?;
            }
            let total: usize = self.families[i].values().map(|f| f.len()).sum();
            if total != self.intervals[i].len() {
                return Err(format!("level {i} has an index claimed by two parents"));
            }
        }
        Ok(())
    }
}

impl Serialize for MicroXApprox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Node<'a> {
            j: u64,
            interval: &'a Interval,
        }
        #[derive(Serialize)]
        struct Repr<'a> {
            depth: u32,
            index_cutoff: u64,
            levels: Vec<Vec<Node<'a>>>,
            truncation: &'a [TruncationEntry],
        }
        Repr {
            depth: self.depth,
            index_cutoff: self.index_cutoff,
            levels: self
                .intervals
                .iter()
                .map(|lvl| lvl.iter().map(|(j, interval)| Node { j: *j, interval }).collect())
                .collect(),
            truncation: &self.truncation,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MicroscopicCheck {
    pub level: u32,
    pub cover: CoverAttempt,
    pub validation: ValidationReport,
    pub coverage: CoverageResult,
}

/// The canonical cover `J_j = I^m_(2^m(j+1))` of the materialized `X_m`.
pub fn verify_microscopic(x: &MicroXApprox, eps_prime: &Rational, level: u32) -> Result<MicroscopicCheck> {
    if level > x.depth() {
        return Err(Error::Precondition(format!("level {level} is not materialized (depth {})", x.depth())));
    }
    if level >= 63 || Rational::inv_pow7(1 << level) >= *eps_prime {
        return Err(Error::Precondition(format!("7^-2^{level} is not below {eps_prime}")));
    }
    let step = 1u64 << level;
    let entries: Vec<(u64, Interval)> = x.level(level).iter().map(|(j, iv)| (j / step - 1, iv.clone())).collect();
    let window_end = entries.last().map_or(0, |e| e.0);
    let cover = CoverAttempt::new(OmegaSet::all(), Constraint::geometric(eps_prime.clone()), window_end, entries);
    let validation = validate(&cover, DEFAULT_PRECISION_CAP);
    let coverage = covers_region(&cover, &x.x_level(level));
    Ok(MicroscopicCheck { level, cover, validation, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_is_spacing_on_unit() {
        let x = build_x(0, 4).unwrap();
        for j in 1..=4 {
            assert_eq!(x.interval(0, j).unwrap().length(), Rational::inv_pow7(j));
        }
        assert_eq!(x.interval(0, 1).unwrap(), &Interval::new(Rational::frac(4, 7), Rational::frac(5, 7)).unwrap());
        assert!(x.interval(0, 5).is_none());
        x.check_invariants().unwrap();
    }

    #[test]
    fn nesting_by_dyadic_parts() {
        let x = build_x(2, 64).unwrap();
        x.check_invariants().unwrap();
        // 6 ∈ A^0_0 = 2 + 4ω, so I^1_6 sits inside I^0_1
        assert!(x.interval(0, 1).unwrap().contains(x.interval(1, 6).unwrap()));
        // 12 ∈ A^0_1 = 4 + 8ω, inside I^0_2
        assert!(x.interval(0, 2).unwrap().contains(x.interval(1, 12).unwrap()));
        for (j, iv) in x.level(2) {
            assert!(x.level(1).values().any(|p| p.contains(iv)), "I^2_{j} is orphaned");
            assert!(x.level(0).values().any(|p| p.contains(iv)));
        }
    }

    #[test]
    fn truncation_is_recorded() {
        let x = build_x(1, 16).unwrap();
        let l0 = &x.truncation()[0];
        assert_eq!((l0.level, l0.first_missing), (0, 17));
        assert_eq!(l0.missing_length, &Rational::inv_pow7(17) * &Rational::frac(7, 6));
        // parent I^0_4 has A^0_3 = 16 + 32ω, so 48 is its first missing index
        let e = x.truncation().iter().find(|e| e.level == 1 && e.parent == 4).unwrap();
        assert_eq!(e.first_missing, 48);
        // parent I^0_5 has A^0_4 = 32 + 64ω, entirely beyond the cutoff
        assert!(x.family(1, 5).is_none());
        assert_eq!(x.truncation().iter().find(|e| e.parent == 5).unwrap().first_missing, 32);
    }

    #[test]
    fn rejects_empty_levels() {
        assert!(build_x(3, 7).is_err());
        assert!(build_x(0, 0).is_err());
        assert!(build_x(3, 8).is_ok());
    }

    #[test]
    fn canonical_cover_of_level_two() {
        let x = build_x(2, 200).unwrap();
        let check = verify_microscopic(&x, &Rational::frac(1, 7), 2).unwrap();
        assert!(check.validation.all_ok());
        assert!(check.coverage.covered);
        for (j, iv) in check.cover.intervals() {
            assert_eq!(iv.length(), Rational::inv_pow7(4 * (j + 1)));
        }
        assert!(verify_microscopic(&x, &Rational::inv_pow7(4), 2).is_err());
        assert!(verify_microscopic(&x, &Rational::frac(1, 7), 3).is_err());
    }
}
