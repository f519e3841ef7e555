//! Structured subsets of ω: finite parts plus arithmetic progressions, minus
//! finitely many excluded points.
//!
//! Every index set the constructions use (`(k+1)·(ω+1)`, the dyadic
//! partitions `A^m_j`, shifted unions) is eventually periodic, so prefix
//! counts are exact and asymptotic densities are exact rationals. Sparse
//! sets that are not eventually periodic enter as explicit finite prefixes.

mod syntax;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;

pub use syntax::parse_omega_set;

/// Largest period expanded when overlapping progressions must be normalized.
const MAX_PERIOD: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Progression {
    pub start: u64,
    pub step: u64,
}

impl Progression {
    pub fn new(start: u64, step: u64) -> Result<Self> {
        if step == 0 {
            return Err(Error::Precondition("progression step must be positive".into()));
        }
        Ok(Progression { start, step })
    }

    pub fn contains(&self, n: u64) -> bool {
        n >= self.start && (n - self.start) % self.step == 0
    }

    /// `card(P ∩ {0..=j})`.
    pub fn count_upto(&self, j: u64) -> u64 {
        if j < self.start {
            0
        } else {
            (j - self.start) / self.step + 1
        }
    }

    /// Least member `>= n`, if representable.
    pub fn first_at_least(&self, n: u64) -> Option<u64> {
        if n <= self.start {
            return Some(self.start);
        }
        let k = (n - self.start).div_ceil(self.step);
        k.checked_mul(self.step)?.checked_add(self.start)
    }

    /// Whether two progressions share any element (then they share infinitely many).
    pub fn meets(&self, other: &Progression) -> bool {
        let g = self.step.gcd(&other.step);
        self.start % g == other.start % g
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "OmegaSetRepr")]
pub struct OmegaSet {
    finite: BTreeSet<u64>,
    progressions: Vec<Progression>,
    excluded: BTreeSet<u64>,
}

#[derive(Deserialize)]
struct OmegaSetRepr {
    #[serde(default)]
    finite: BTreeSet<u64>,
    #[serde(default)]
    progressions: Vec<Progression>,
    #[serde(default)]
    excluded: BTreeSet<u64>,
}

impl TryFrom<OmegaSetRepr> for OmegaSet {
    type Error = Error;

    fn try_from(r: OmegaSetRepr) -> Result<Self> {
        OmegaSet::new(r.finite, r.progressions, r.excluded)
    }
}

impl OmegaSet {
    pub fn new(
        finite: impl IntoIterator<Item = u64>,
        progressions: impl IntoIterator<Item = Progression>,
        excluded: impl IntoIterator<Item = u64>,
    ) -> Result<Self> {
        let finite: BTreeSet<u64> = finite.into_iter().collect();
        let excluded: BTreeSet<u64> = excluded.into_iter().collect();
        let mut progressions: Vec<Progression> = progressions.into_iter().collect();
        if progressions.iter().any(|p| p.step == 0) {
            return Err(Error::Precondition("progression step must be positive".into()));
        }
        if let Some(x) = finite.intersection(&excluded).next() {
            return Err(Error::Precondition(format!("{x} is both listed and excluded")));
        }
        progressions.sort();
        progressions.dedup();
        Ok(OmegaSet { finite, progressions, excluded })
    }

    pub fn empty() -> Self {
        OmegaSet { finite: BTreeSet::new(), progressions: Vec::new(), excluded: BTreeSet::new() }
    }

    /// ω itself.
    pub fn all() -> Self {
        Self::progression(0, 1)
    }

    /// `{start, start+step, ...}`.
    pub fn progression(start: u64, step: u64) -> Self {
        assert!(step > 0, "progression step must be positive");
        OmegaSet {
            finite: BTreeSet::new(),
            progressions: vec![Progression { start, step }],
            excluded: BTreeSet::new(),
        }
    }

    /// `k·(ω+1) = {k, 2k, 3k, ...}`.
    pub fn multiples(k: u64) -> Self {
        Self::progression(k, k)
    }

    pub fn finite(elements: impl IntoIterator<Item = u64>) -> Self {
        OmegaSet { finite: elements.into_iter().collect(), progressions: Vec::new(), excluded: BTreeSet::new() }
    }

    pub fn finite_part(&self) -> &BTreeSet<u64> {
        &self.finite
    }

    pub fn progressions(&self) -> &[Progression] {
        &self.progressions
    }

    pub fn excluded(&self) -> &BTreeSet<u64> {
        &self.excluded
    }

    pub fn is_finite_set(&self) -> bool {
        self.progressions.is_empty()
    }

    fn in_progressions(&self, n: u64) -> bool {
        self.progressions.iter().any(|p| p.contains(n))
    }

    pub fn contains(&self, n: u64) -> bool {
        if self.excluded.contains(&n) {
            return false;
        }
        self.finite.contains(&n) || self.in_progressions(n)
    }

    /// `card(S ∩ {0, ..., j})`.
    pub fn count_prefix(&self, j: u64) -> u64 {
        PrefixCounter::new(self).count(j)
    }

    /// Exact asymptotic density: sum of `1/step` over a disjoint normalization
    /// of the progressions. Finite modifications contribute nothing.
    pub fn density_exact(&self) -> Result<Rational> {
        match self.union_shape() {
            UnionShape::Empty => Ok(Rational::zero()),
            UnionShape::Disjoint => Ok(self
                .progressions
                .iter()
                .fold(Rational::zero(), |acc, p| acc + Rational::frac(1, p.step as i64))),
            UnionShape::Periodic { period, residues, .. } => {
                Ok(Rational::frac(residues.len() as i64, period as i64))
            }
            UnionShape::Irregular => Err(Error::Normalization(format!(
                "overlapping progressions with period above {MAX_PERIOD}"
            ))),
        }
    }

    /// Empirical lower/upper density over the upper half of `[0, j_max]`.
    pub fn density_estimate(&self, j_max: u64, samples: u64) -> Result<DensityReport> {
        if samples == 0 || j_max < samples {
            return Err(Error::Precondition(format!(
                "density window needs j_max >= samples >= 1 (got {j_max}, {samples})"
            )));
        }
        let counter = PrefixCounter::new(self);
        let prefix_ratios: BTreeMap<u64, Rational> = sample_grid(j_max, samples)
            .into_iter()
            .map(|j| (j, Rational::frac(counter.count(j) as i64, j as i64 + 1)))
            .collect();
        let lower_estimate = prefix_ratios.values().min().cloned().expect("nonempty grid");
        let upper_estimate = prefix_ratios.values().max().cloned().expect("nonempty grid");
        Ok(DensityReport {
            window_end: j_max,
            prefix_ratios,
            lower_estimate,
            upper_estimate,
            exact_density: self.density_exact().ok(),
        })
    }

    /// Constant `C` with `|count_prefix(j)/(j+1) - d| <= C/(j+1)` for every `j`.
    pub fn error_constant(&self) -> u64 {
        let max_start = self.progressions.iter().map(|p| p.start).max().unwrap_or(0);
        self.progressions.len() as u64 + self.finite.len() as u64 + self.excluded.len() as u64 + max_start
    }

    /// Increasing enumeration starting at the least member `>= from`.
    pub fn iter_from(&self, from: u64) -> OmegaIter<'_> {
        let mut heap = BinaryHeap::new();
        for (i, p) in self.progressions.iter().enumerate() {
            if let Some(v) = p.first_at_least(from) {
                heap.push(Reverse((v, i)));
            }
        }
        OmegaIter {
            set: self,
            heap,
            finite: self.finite.range(from..).copied().collect::<Vec<_>>().into_iter().peekable(),
            last: None,
        }
    }

    pub fn iter(&self) -> OmegaIter<'_> {
        self.iter_from(0)
    }

    pub fn first_n(&self, count: usize) -> Vec<u64> {
        self.iter().take(count).collect()
    }

    pub fn elements_upto(&self, j: u64) -> Vec<u64> {
        self.iter().take_while(|&n| n <= j).collect()
    }

    pub fn min(&self) -> Option<u64> {
        self.iter().next()
    }

    /// `S ∩ [lo, ∞)`.
    pub fn restrict_from(&self, lo: u64) -> OmegaSet {
        let progressions = self
            .progressions
            .iter()
            .filter_map(|p| p.first_at_least(lo).map(|start| Progression { start, step: p.step }));
        OmegaSet::new(
            self.finite.range(lo..).copied(),
            progressions,
            self.excluded.range(lo..).copied(),
        )
        .expect("restriction preserves invariants")
    }

    /// `S - k = {n - k : n ∈ S}`; fails if some member is below `k`.
    pub fn shift_down(&self, k: u64) -> Result<OmegaSet> {
        if let Some(min) = self.min() {
            if min < k {
                return Err(Error::Precondition(format!("member {min} is below shift {k}")));
            }
        }
        let restricted = self.restrict_from(k);
        OmegaSet::new(
            restricted.finite.iter().map(|n| n - k),
            restricted.progressions.iter().map(|p| Progression { start: p.start - k, step: p.step }),
            restricted.excluded.iter().map(|n| n - k),
        )
    }

    /// Image under `n ↦ factor·(n + 1)`.
    pub fn scale_successor(&self, factor: u64) -> OmegaSet {
        assert!(factor > 0);
        let f = |n: u64| factor * (n + 1);
        OmegaSet::new(
            self.finite.iter().map(|&n| f(n)),
            self.progressions.iter().map(|p| Progression { start: f(p.start), step: factor * p.step }),
            self.excluded.iter().map(|&n| f(n)),
        )
        .expect("scaling preserves invariants")
    }

    pub fn union(&self, other: &OmegaSet) -> OmegaSet {
        let excluded: Vec<u64> = self
            .excluded
            .union(&other.excluded)
            .copied()
            .filter(|&x| !self.contains(x) && !other.contains(x))
            .collect();
        OmegaSet::new(
            self.finite.union(&other.finite).copied(),
            self.progressions.iter().chain(other.progressions.iter()).copied(),
            excluded,
        )
        .expect("union preserves invariants")
    }

    fn union_shape(&self) -> UnionShape {
        if self.progressions.is_empty() {
            return UnionShape::Empty;
        }
        let disjoint = self
            .progressions
            .iter()
            .enumerate()
            .all(|(i, p)| self.progressions[i + 1..].iter().all(|q| !p.meets(q)));
        if disjoint {
            return UnionShape::Disjoint;
        }
        let mut period: u64 = 1;
        for p in &self.progressions {
            period = period.lcm(&p.step);
            if period > MAX_PERIOD {
                return UnionShape::Irregular;
            }
        }
        let threshold = self.progressions.iter().map(|p| p.start).max().unwrap();
        let residues: Vec<u64> = (0..period).filter(|&r| self.in_progressions(threshold + r)).collect();
        UnionShape::Periodic { threshold, period, residues }
    }
}

enum UnionShape {
    Empty,
    Disjoint,
    /// Membership of `threshold + r` for `r < period`; periodic from `threshold` on.
    Periodic { threshold: u64, period: u64, residues: Vec<u64> },
    Irregular,
}

/// Reusable exact prefix counter.
struct PrefixCounter<'a> {
    set: &'a OmegaSet,
    shape: UnionShape,
    /// finite elements not already in a progression
    extra: Vec<u64>,
    /// excluded elements that sit in a progression
    removed: Vec<u64>,
}

impl<'a> PrefixCounter<'a> {
    fn new(set: &'a OmegaSet) -> Self {
        let extra = set.finite.iter().copied().filter(|&n| !set.in_progressions(n)).collect();
        let removed = set.excluded.iter().copied().filter(|&n| set.in_progressions(n)).collect();
        PrefixCounter { set, shape: set.union_shape(), extra, removed }
    }

    fn progression_count(&self, j: u64) -> u64 {
        let progs = &self.set.progressions;
        match &self.shape {
            UnionShape::Empty => 0,
            UnionShape::Disjoint => progs.iter().map(|p| p.count_upto(j)).sum(),
            UnionShape::Periodic { threshold, period, residues } => {
                if j < *threshold {
                    (0..=j).filter(|&n| self.set.in_progressions(n)).count() as u64
                } else {
                    let head = (0..*threshold).filter(|&n| self.set.in_progressions(n)).count() as u64;
                    let span = j - threshold + 1;
                    let full = span / period;
                    let rem = span % period;
                    let partial = residues.partition_point(|&r| r < rem) as u64;
                    head + full * residues.len() as u64 + partial
                }
            }
            UnionShape::Irregular => (0..=j).filter(|&n| self.set.in_progressions(n)).count() as u64,
        }
    }

    fn count(&self, j: u64) -> u64 {
        let extra = self.extra.partition_point(|&n| n <= j) as u64;
        let removed = self.removed.partition_point(|&n| n <= j) as u64;
        self.progression_count(j) + extra - removed
    }
}

/// Evenly spaced sample points over `[j_max/2, j_max]`.
pub fn sample_grid(j_max: u64, samples: u64) -> Vec<u64> {
    let lo = j_max / 2;
    if samples <= 1 {
        return vec![j_max];
    }
    let span = j_max - lo;
    let mut grid: Vec<u64> = (0..samples)
        .map(|k| lo + ((span as u128 * k as u128) / (samples as u128 - 1)) as u64)
        .collect();
    grid.dedup();
    grid
}

pub struct OmegaIter<'a> {
    set: &'a OmegaSet,
    heap: BinaryHeap<Reverse<(u64, usize)>>,
    finite: std::iter::Peekable<std::vec::IntoIter<u64>>,
    last: Option<u64>,
}

impl Iterator for OmegaIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            let from_heap = self.heap.peek().map(|Reverse((v, _))| *v);
            let from_finite = self.finite.peek().copied();
            let next = match (from_heap, from_finite) {
                (None, None) => return None,
                (Some(h), Some(f)) if f <= h => self.finite.next().unwrap(),
                (None, Some(_)) => self.finite.next().unwrap(),
                _ => {
                    let Reverse((v, i)) = self.heap.pop().unwrap();
                    let p = self.set.progressions[i];
                    if let Some(nv) = v.checked_add(p.step) {
                        self.heap.push(Reverse((nv, i)));
                    }
                    v
                }
            };
            if self.last == Some(next) || self.set.excluded.contains(&next) {
                continue;
            }
            self.last = Some(next);
            return Some(next);
        }
    }
}

/// Windowed density telemetry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    pub window_end: u64,
    pub prefix_ratios: BTreeMap<u64, Rational>,
    pub lower_estimate: Rational,
    pub upper_estimate: Rational,
    pub exact_density: Option<Rational>,
}

/// `A^m_j = 2^(m+j+1) + 2^(m+j+2)·ω`.
pub fn dyadic_part(m: u32, j: u32) -> OmegaSet {
    assert!(m + j + 2 < 64, "dyadic part exceeds u64 range");
    OmegaSet::progression(1 << (m + j + 1), 1 << (m + j + 2))
}

/// `A^m_0, ..., A^m_(j_count-1)`, a partition of an initial part of `2^(m+1)·(ω+1)`.
pub fn partition_dyadic(m: u32, j_count: u32) -> Vec<OmegaSet> {
    (0..j_count).map(|j| dyadic_part(m, j)).collect()
}
