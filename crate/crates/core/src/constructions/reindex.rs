use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::covers::{Constraint, CoverAttempt};
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::OmegaSet;

/// `J_(k+1)(n+1) = J'_n`: spreads an `ω`-indexed cover with `|J'_n| <= eps^((k+2)(n+1))`
/// onto `(k+1)·(ω+1)` under `Geometric(eps)`.
pub fn thin_reindex(cover: &CoverAttempt, eps: &Rational, k: u64) -> Result<CoverAttempt> {
    for (n, j) in cover.intervals() {
        if j.length() > eps.pow((k + 2) * (n + 1)) {
            return Err(Error::Validation(format!("|J'_{n}| exceeds eps^({}·{})", k + 2, n + 1)));
        }
    }
    let f = k + 1;
    Ok(CoverAttempt::new(
        OmegaSet::all().scale_successor(f),
        Constraint::geometric(eps.clone()),
        f * (cover.window_end() + 1),
        cover.intervals().iter().map(|(n, j)| (f * (n + 1), j.clone())),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnionReindex {
    pub cover: CoverAttempt,
    /// `D'_k = D_k - 2^k`
    pub parts: Vec<OmegaSet>,
    /// the parts were checked pairwise disjoint on `[0, disjoint_upto]`
    pub disjoint_upto: u64,
}

/// Merges covers on `D_k ⊂ 2^(k+1)·(ω+1)` into one cover on `∪ (D_k - 2^k)`.
pub fn union_reindex_mprime(covers: &[CoverAttempt]) -> Result<UnionReindex> {
    let Some(first) = covers.first() else {
        return Err(Error::Precondition("no covers to merge".into()));
    };
    let eps = match first.constraint() {
        Constraint::Geometric { eps } => eps.clone(),
        c => return Err(Error::Precondition(format!("expected a geometric constraint, got {c:?}"))),
    };
    if covers.len() >= 63 {
        return Err(Error::Precondition(format!("{} covers exceed the 64-bit index range", covers.len())));
    }
    let mut parts = Vec::with_capacity(covers.len());
    let mut intervals = BTreeMap::new();
    let mut window_end = 0;
    for (k, c) in covers.iter().enumerate() {
        if c.constraint() != first.constraint() {
            return Err(Error::Precondition(format!("cover {k} has a different constraint")));
        }
        let shift = 1u64 << k;
        let period = shift << 1;
        let stray = c
            .index_set()
            .iter()
            .take_while(|&d| d <= c.window_end())
            .chain(c.intervals().keys().copied())
            .find(|d| d % period != 0 || *d == 0);
        if let Some(d) = stray {
            return Err(Error::Precondition(format!("index {d} of cover {k} is not in {period}·(ω+1)")));
        }
        parts.push(c.index_set().shift_down(shift)?);
        intervals.extend(c.intervals().iter().map(|(d, j)| (d - shift, j.clone())));
        window_end = window_end.max(c.window_end().saturating_sub(shift));
    }
    let mut seen = BTreeSet::new();
    for (k, part) in parts.iter().enumerate() {
        for d in part.iter().take_while(|&d| d <= window_end) {
            if !seen.insert(d) {
                return Err(Error::Validation(format!("index {d} of D'_{k} occurs in an earlier part")));
            }
        }
    }
    let d = parts.iter().fold(OmegaSet::empty(), |acc, p| acc.union(p));
    Ok(UnionReindex {
        cover: CoverAttempt::new(d, Constraint::geometric(eps), window_end, intervals),
        parts,
        disjoint_upto: window_end,
    })
}

/// Last `j <= end` with `card(D ∩ (j+1)) > (j+1)/4`, if any.
fn last_quarter_violation(d: &OmegaSet, end: u64) -> Option<u64> {
    let mut count = 0u64;
    let mut last = None;
    for j in 0..=end {
        if d.contains(j) {
            count += 1;
        }
        if 4 * count > j + 1 {
            last = Some(j);
        }
    }
    last
}

/// Greedy-maximal `t ∉ avoid ∪ used` with `t <= cap`.
fn greedy_max(cap: u64, avoid: &OmegaSet, used: &BTreeSet<u64>) -> Option<u64> {
    (0..=cap).rev().find(|t| !avoid.contains(*t) && !used.contains(t))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LnReindex {
    /// `card(D ∩ (j+1)) <= (j+1)/4` for every `k < j <= window`
    pub k: u64,
    pub m: u32,
    pub t: Vec<u64>,
    #[serde(rename = "E")]
    pub e: OmegaSet,
    pub cover: CoverAttempt,
    /// `(i+2)^m <= 2(t_i+2)` and `t_i+2 <= (i+2)^m` for every `i`
    pub sandwich_ok: bool,
    /// `card(E ∩ (j+1)) <= (2(j+2))^(1/m) - 1` was checked for `j <= bound_checked_upto`
    pub bound_checked_upto: u64,
    /// first `j` breaking the counting bound
    pub bound_violation: Option<u64>,
}

fn pow_u128(base: u64, m: u32) -> Option<u128> {
    (base as u128).checked_pow(m)
}

/// `E = {t_0, t_1, ...}` disjoint from `avoid`, carrying `J_(t_n) = I_n` from a
/// `Logarithmic(eps^m)` cover supplied by `factory`.
///
/// `window` bounds every index touched. With `m = None` the least admissible
/// `m >= 2` with `2^m > k` is used; `count = None` takes as many `t_i` as fit.
pub fn reindex_ln_avoid<F>(
    factory: F,
    avoid: &OmegaSet,
    eps: &Rational,
    m: Option<u32>,
    count: Option<usize>,
    window: u64,
) -> Result<LnReindex>
where
    F: FnOnce(&Rational) -> Result<CoverAttempt>,
{
    let k = last_quarter_violation(avoid, window).unwrap_or(0);
    let least_m = (2..64).find(|&m| 1u64 << m > k).expect("k fits in 64 bits");
    let m = match m {
        Some(m) if m < least_m => {
            return Err(Error::Precondition(format!("m = {m} needs 2^m > {k} and m >= 2")));
        }
        Some(m) => m,
        None => least_m,
    };
    // t_i + 2 <= (i+2)^m <= window + 2 for i < count
    let fits = |c: usize| c == 0 || pow_u128(c as u64 + 1, m).is_some_and(|p| p <= window as u128 + 2);
    let count = match count {
        Some(c) if !fits(c) => {
            return Err(Error::WindowInsufficient(format!("{c} indices with m = {m} need a window of ({})^{m}", c + 1)));
        }
        Some(c) => c,
        None => (0..).take_while(|&c| fits(c)).last().unwrap_or(0),
    };

    let mut used = BTreeSet::new();
    let mut t = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let cap = (pow_u128(i + 2, m).expect("fits") - 2) as u64;
        let ti = greedy_max(cap, avoid, &used)
            .ok_or_else(|| Error::WindowInsufficient(format!("no free index below {cap} for t_{i}")))?;
        used.insert(ti);
        t.push(ti);
    }
    let sandwich_ok = t.iter().enumerate().all(|(i, &ti)| {
        let p = pow_u128(i as u64 + 2, m).expect("fits");
        p <= 2 * (ti as u128 + 2) && ti as u128 + 2 <= p
    });

    // members of E beyond t_(count-1) satisfy t_i + 2 >= (i+2)^m / 2 >= (count+2)^m / 2
    let complete_below = pow_u128(count as u64 + 2, m).map_or(u64::MAX, |p| (p / 2).saturating_sub(2) as u64);
    let bound_checked_upto = complete_below.saturating_sub(1).min(window);
    let mut bound_violation = None;
    let mut card = 0u64;
    for j in 0..=bound_checked_upto {
        if used.contains(&j) {
            card += 1;
        }
        // card <= (2(j+2))^(1/m) - 1  ⟺  (card+1)^m <= 2(j+2)
        if pow_u128(card + 1, m).is_none_or(|p| p > 2 * (j as u128 + 2)) {
            bound_violation = Some(j);
            break;
        }
    }

    let eps_m = eps.pow(m as u64);
    let source = factory(&eps_m)?;
    if source.constraint() != &Constraint::logarithmic(eps_m) {
        return Err(Error::Precondition(format!("source cover must use Logarithmic(eps^{m})")));
    }
    let intervals: BTreeMap<u64, Interval> =
        t.iter().enumerate().filter_map(|(n, ti)| source.get(n as u64).map(|j| (*ti, j.clone()))).collect();
    let e = OmegaSet::finite(t.iter().copied());
    Ok(LnReindex {
        k,
        m,
        cover: CoverAttempt::new(e.clone(), Constraint::logarithmic(eps.clone()), window, intervals),
        t,
        e,
        sandwich_ok,
        bound_checked_upto,
        bound_violation,
    })
}

/// Pairwise disjoint `E_0, E_1, ...`, each avoiding the earlier ones, merged into one cover.
pub fn ln_union_chain<F>(factories: Vec<F>, eps: &Rational, window: u64) -> Result<(Vec<LnReindex>, CoverAttempt)>
where
    F: FnOnce(&Rational) -> Result<CoverAttempt>,
{
    let mut taken = OmegaSet::empty();
    let mut parts: Vec<LnReindex> = Vec::with_capacity(factories.len());
    let mut intervals = BTreeMap::new();
    for factory in factories {
        let part = reindex_ln_avoid(factory, &taken, eps, None, None, window)?;
        taken = taken.union(&part.e);
        intervals.extend(part.cover.intervals().iter().map(|(d, j)| (*d, j.clone())));
        parts.push(part);
    }
    let cover = CoverAttempt::new(taken, Constraint::logarithmic(eps.clone()), window, intervals);
    Ok((parts, cover))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityReindex {
    pub m: u64,
    #[serde(rename = "E")]
    pub e: Vec<u64>,
    pub t: Vec<u64>,
    #[serde(rename = "F")]
    pub f: OmegaSet,
    pub cover: CoverAttempt,
    /// `m(e_i+1) <= 2(t_i+1)` and `t_i+1 <= m(e_i+1)` for every `i`
    pub sandwich_ok: bool,
    /// the counting bounds were checked for `j <= bound_checked_upto`
    pub bound_checked_upto: u64,
    /// first `j` with `card(F ∩ (j+1)) > #{e ∈ E : m(e+1) <= 2(j+1)}`
    pub bound_violation: Option<u64>,
}

/// `F = {t_i}` disjoint from `avoid`, carrying `J_(t_i) = I_(e_i)` from a cover with
/// `|I_e| <= eps^(m(e+1))`, under `Geometric(eps)`.
pub fn reindex_density_avoid(source: &CoverAttempt, avoid: &OmegaSet, eps: &Rational, m: u64) -> Result<DensityReindex> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::Precondition(format!("m = {m} must be even and at least 4")));
    }
    let e: Vec<u64> = source.entries_upto(source.window_end()).map(|(d, _)| d).collect();
    for (d, j) in source.entries_upto(source.window_end()) {
        if j.length() > eps.pow(m * (d + 1)) {
            return Err(Error::Validation(format!("|I_{d}| exceeds eps^({m}·{})", d + 1)));
        }
    }
    let reach = e.last().map_or(m, |&last| m * (last + 1));
    let mut count = 0u64;
    for j in 0..=reach {
        if avoid.contains(j) {
            count += 1;
        }
        if j >= m && 4 * count >= j + 1 {
            return Err(Error::Precondition(format!("card(D ∩ {}) reaches a quarter at j = {j}", j + 1)));
        }
    }

    let mut used = BTreeSet::new();
    let mut t = Vec::with_capacity(e.len());
    for &ei in &e {
        let cap = m * (ei + 1) - 1;
        let ti = greedy_max(cap, avoid, &used)
            .ok_or_else(|| Error::Precondition(format!("no free index below {cap} for e = {ei}")))?;
        used.insert(ti);
        t.push(ti);
    }
    let sandwich_ok = e.iter().zip(&t).all(|(&ei, &ti)| m * (ei + 1) <= 2 * (ti + 1) && ti < m * (ei + 1));

    // members of E beyond the window give t + 1 >= m(window+2)/2
    let bound_checked_upto = (m * (source.window_end() + 2) / 2).saturating_sub(2);
    let mut bound_violation = None;
    let (mut card_f, mut card_e) = (0usize, 0usize);
    for j in 0..=bound_checked_upto {
        if used.contains(&j) {
            card_f += 1;
        }
        while card_e < e.len() && m * (e[card_e] + 1) <= 2 * (j + 1) {
            card_e += 1;
        }
        if card_f > card_e {
            bound_violation = Some(j);
            break;
        }
    }

    let intervals: BTreeMap<u64, Interval> =
        e.iter().zip(&t).map(|(ei, ti)| (*ti, source.get(*ei).expect("stored").clone())).collect();
    let f = OmegaSet::finite(t.iter().copied());
    let window_end = t.iter().copied().max().unwrap_or(0);
    Ok(DensityReindex {
        m,
        cover: CoverAttempt::new(f.clone(), Constraint::geometric(eps.clone()), window_end, intervals),
        e,
        t,
        f,
        sandwich_ok,
        bound_checked_upto,
        bound_violation,
    })
}
