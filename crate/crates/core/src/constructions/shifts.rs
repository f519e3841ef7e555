use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::micro_x::MicroXApprox;
use crate::covers::{Constraint, CoverAttempt};
use crate::error::{Error, Result};
use crate::exact::{digits_base7, Interval, Rational};
use crate::spacing::{compute_y, compute_z, q_sequence, PlacedFamily, QStatus, Shift};

/// Entries of the q-sequence a pairwise difference must produce within its prefix.
pub const NONDEGENERATE_Q_LEN: usize = 8;

/// `q` prefix of `r_j - r_i` at the family's scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    /// false when `r_j - r_i >= 7^-m`, where every shifted copy misses the root
    pub relevant: bool,
    pub q_prefix: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiEntry {
    pub a: u64,
    /// least `k` with `J_k` meeting `r_i + I_a`
    pub k: u64,
    /// number of stored `J_k` meeting `r_i + I_a`
    pub hits: usize,
}

/// Prefix-ratio telemetry of a set over `[start, window]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetTelemetry {
    pub count: usize,
    pub ratio_at_window: Rational,
    pub min_prefix_ratio: Rational,
    pub argmin: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftSets {
    pub i: usize,
    pub y: BTreeSet<u64>,
    pub z: BTreeSet<u64>,
    pub z_prime: BTreeSet<u64>,
    pub phi: Vec<PhiEntry>,
    /// members of `Z_i` met by no stored `J_k`
    pub unmapped: Vec<u64>,
    pub multi_hit: usize,
    /// placed `a <= window` whose copy `r_i + I_a` meets no `J_k` with `k < a`
    pub premise_failures: Vec<u64>,
    pub phi_injective: bool,
    /// `φ(a) <= a` on every mapped `a`
    pub phi_bounded: bool,
    pub y_telemetry: SetTelemetry,
    pub z_telemetry: SetTelemetry,
    pub z_prime_telemetry: SetTelemetry,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShiftExperiment {
    pub n: u32,
    pub m: u64,
    pub window: u64,
    pub shifts: Vec<Rational>,
    #[serde(rename = "A_density")]
    pub a_density: Rational,
    #[serde(rename = "A_in_window")]
    pub a_in_window: usize,
    pub pairs: Vec<PairCheck>,
    pub sets: Vec<ShiftSets>,
    /// some `(i, a)` fails the premise, so the run carries no guarantee
    pub premise_void: bool,
    pub pairwise_disjoint: bool,
    /// `(i, j, k)` with `k ∈ Z'_i ∩ Z'_j`
    pub overlaps: Vec<(usize, usize, u64)>,
}

impl ShiftExperiment {
    pub fn phi_ok(&self) -> bool {
        self.sets.iter().all(|s| s.phi_injective && s.phi_bounded)
    }
}

/// The spacing family `(I^(n+1)_a)_{a∈A}` inside `I^n_m`.
pub fn shift_family<'x>(x: &'x MicroXApprox, n: u32, m: u64) -> Result<&'x PlacedFamily> {
    if n + 1 > x.depth() {
        return Err(Error::Precondition(format!("level {} is not materialized (depth {})", n + 1, x.depth())));
    }
    x.family(n + 1, m)
        .ok_or_else(|| Error::Precondition(format!("I^{n}_{m} carries no materialized family")))
}

/// Run the shifted-copy selection for `r_0 < ... < r_s` against `cover` inside `I^n_m`.
pub fn shift_family_experiment(
    x: &MicroXApprox,
    shifts: &[Shift],
    cover: &CoverAttempt,
    (n, m): (u32, u64),
    window: u64,
) -> Result<ShiftExperiment> {
    let fam = shift_family(x, n, m)?;
    if shifts.is_empty() {
        return Err(Error::Precondition("at least one shift is required".into()));
    }
    if shifts.windows(2).any(|w| w[0].value >= w[1].value) {
        return Err(Error::Precondition("shifts must be strictly increasing".into()));
    }
    let prefix = shifts.iter().map(|s| s.digits.as_ref().map_or(0, |d| d.len())).min().unwrap_or(0);
    let scale = fam.tree().base_exponent();

    // differences r_j - r_i for i < j, as shifts at the family's scale
    let mut pairs = Vec::new();
    let mut diffs: BTreeMap<(usize, usize), Shift> = BTreeMap::new();
    for i in 0..shifts.len() {
        for j in i + 1..shifts.len() {
            let value = &shifts[j].value - &shifts[i].value;
            let relevant = value < Rational::inv_pow7(scale);
            let shift = if relevant {
                if prefix == 0 {
                    return Err(Error::PrefixExhausted { needed: NONDEGENERATE_Q_LEN, available: 0 });
                }
                Shift::with_digits(value.clone(), digits_base7(&value, scale, prefix)?)?
            } else {
                Shift { value, digits: None }
            };
            let q_prefix = match &shift.digits {
                Some(d) => {
                    let q = q_sequence(d, NONDEGENERATE_Q_LEN)?;
                    if q.status != QStatus::Complete {
                        return Err(Error::PrefixExhausted { needed: NONDEGENERATE_Q_LEN, available: q.indices.len() });
                    }
                    q.indices
                }
                None => Vec::new(),
            };
            pairs.push(PairCheck { i, j, relevant, q_prefix });
            diffs.insert((i, j), shift);
        }
    }

    let members: Vec<u64> = fam.indices().filter(|&a| a <= window).collect();
    let start = members.first().copied().unwrap_or(0);
    let entries: Vec<(u64, &Interval)> = cover.entries_upto(cover.window_end()).collect();

    let sets: Vec<ShiftSets> = (0..shifts.len())
        .into_par_iter()
        .map(|i| {
            let r = &shifts[i].value;
            let local = cover.shifted(&-r);
            let later: Vec<Shift> = (i + 1..shifts.len()).map(|j| diffs[&(i, j)].clone()).collect();
            let y = compute_y(fam, &local, window);
            let z = compute_z(fam, &local, &later, window)?;

            // J_k meeting r_i + I_a, per placed a <= window
            let mut meeting: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
            for (k, j) in &entries {
                for pos in fam.hits_shifted(j, r) {
                    let a = fam.placements()[pos].a;
                    if a <= window {
                        meeting.entry(a).or_default().push(*k);
                    }
                }
            }
            let z_prime: BTreeSet<u64> =
                z.iter().filter_map(|a| meeting.get(a)).flatten().copied().collect();
            let mut phi = Vec::new();
            let mut unmapped = Vec::new();
            for a in &z {
                match meeting.get(a) {
                    Some(ks) => phi.push(PhiEntry { a: *a, k: ks[0], hits: ks.len() }),
                    None => unmapped.push(*a),
                }
            }
            let images: BTreeSet<u64> = phi.iter().map(|e| e.k).collect();
            let premise_failures =
                members.iter().copied().filter(|a| meeting.get(a).is_none_or(|ks| ks[0] >= *a)).collect();
            Ok(ShiftSets {
                i,
                y_telemetry: telemetry(&y, start, window),
                z_telemetry: telemetry(&z, start, window),
                z_prime_telemetry: telemetry(&z_prime, start, window),
                multi_hit: phi.iter().filter(|e| e.hits > 1).count(),
                phi_injective: images.len() == phi.len(),
                phi_bounded: phi.iter().all(|e| e.k <= e.a),
                y,
                z,
                z_prime,
                phi,
                unmapped,
                premise_failures,
            })
        })
        .collect::<Result<_>>()?;

    let mut overlaps = Vec::new();
    for (i, si) in sets.iter().enumerate() {
        for sj in &sets[i + 1..] {
            overlaps.extend(si.z_prime.intersection(&sj.z_prime).map(|k| (i, sj.i, *k)));
        }
    }
    Ok(ShiftExperiment {
        n,
        m,
        window,
        shifts: shifts.iter().map(|s| s.value.clone()).collect(),
        a_density: fam.index_set().density_exact()?,
        a_in_window: members.len(),
        pairs,
        premise_void: sets.iter().any(|s| !s.premise_failures.is_empty()),
        pairwise_disjoint: overlaps.is_empty(),
        overlaps,
        sets,
    })
}

fn telemetry(set: &BTreeSet<u64>, start: u64, window: u64) -> SetTelemetry {
    let mut count = set.range(..start).count() as u64;
    let (mut best_c, mut best_j) = (u64::MAX, start);
    for j in start..=window {
        if set.contains(&j) {
            count += 1;
        }
        // count/(j+1) < best_c/(best_j+1)
        if best_c == u64::MAX || (count as u128) * (best_j as u128 + 1) < (best_c as u128) * (j as u128 + 1) {
            best_c = count;
            best_j = j;
        }
    }
    let total = set.range(..=window).count();
    SetTelemetry {
        count: total,
        ratio_at_window: Rational::frac(total as i64, window as i64 + 1),
        min_prefix_ratio: Rational::frac(best_c as i64, best_j as i64 + 1),
        argmin: best_j,
    }
}

/// A random value `Σ_{t<len} d_t 7^-(m+1+t)` with nonzero first and last digits.
fn random_expansion<R: Rng>(rng: &mut R, m: u64, len: usize, lead_max: u8) -> Rational {
    let digits: Vec<u8> = (0..len)
        .map(|t| if t == 0 { rng.gen_range(1..=lead_max) } else if t + 1 == len { rng.gen_range(1..=6) } else { rng.gen_range(0..=6) })
        .collect();
    crate::exact::Digit7Stream::new(m, digits, true).expect("digits in range").prefix_value()
}

/// `count` increasing shifts in `(0, 1)` with gaps below `7^-(scale+1)`, each carrying
/// `prefix` digits, such that every pairwise difference is non-degenerate.
pub fn clustered_shifts<R: Rng>(rng: &mut R, count: usize, scale: u64, prefix: usize) -> Result<Vec<Shift>> {
    if count == 0 || count > 7 || prefix < NONDEGENERATE_Q_LEN {
        return Err(Error::Precondition(format!("need 1..=7 shifts and a prefix of at least {NONDEGENERATE_Q_LEN}")));
    }
    // the whole cluster spans less than 7^-scale, so all differences stay relevant
    let width = prefix.saturating_sub(scale as usize + 2).max(NONDEGENERATE_Q_LEN);
    for _ in 0..64 {
        let mut values = vec![random_expansion(rng, 0, prefix, 5)];
        for _ in 1..count {
            let gap = random_expansion(rng, scale + 1, width, 6);
            let next = values.last().expect("nonempty") + &gap;
            values.push(next);
        }
        let ok = (0..count).all(|i| {
            (i + 1..count).all(|j| {
                let d = &values[j] - &values[i];
                digits_base7(&d, scale, prefix)
                    .and_then(|s| Ok(q_sequence(&s, NONDEGENERATE_Q_LEN)?.status == QStatus::Complete))
                    .unwrap_or(false)
            })
        });
        if ok {
            return values.into_iter().map(|v| Shift::new(v, 0, prefix)).collect();
        }
    }
    Err(Error::Precondition("no non-degenerate shift family found in 64 draws".into()))
}

/// A geometric(1/7) cover giving every `(i, a)` with `a <= window` its own
/// `J_k = r_i + I_a` at some `k < a`, plus `extras` random intervals on unused indices.
pub fn premise_cover<R: Rng>(
    rng: &mut R,
    fam: &PlacedFamily,
    shifts: &[Shift],
    window: u64,
    extras: usize,
) -> Result<CoverAttempt> {
    let mut demands: Vec<(u64, usize)> =
        fam.indices().filter(|&a| a <= window).flat_map(|a| (0..shifts.len()).map(move |i| (a, i))).collect();
    demands.sort();
    let mut intervals = BTreeMap::new();
    let mut next_free = 0u64;
    for (a, i) in demands {
        if next_free >= a {
            return Err(Error::InfeasibleBudget(format!("no free index below {a} for shift {i}")));
        }
        let ia = fam.interval(a).expect("placed");
        intervals.insert(next_free, ia.shift(&shifts[i].value));
        next_free += 1;
    }
    let root = fam.tree().root();
    let free: Vec<u64> = (next_free..=window).collect();
    for _ in 0..extras.min(free.len()) {
        let k = free[rng.gen_range(0..free.len())];
        if intervals.contains_key(&k) {
            continue;
        }
        let r = &shifts[rng.gen_range(0..shifts.len())].value;
        let t = Rational::frac(rng.gen_range(0..=1 << 20), 1 << 20);
        let lo = root.lo() + &(&t * &root.length()) + r.clone();
        intervals.insert(k, Interval::with_length(lo, &Rational::inv_pow7(k + 1)));
    }
    let d = crate::omega::OmegaSet::finite(intervals.keys().copied());
    Ok(CoverAttempt::new(d, Constraint::geometric(Rational::frac(1, 7)), window, intervals))
}

#[cfg(test)]
mod tests {
    use super::super::micro_x::build_x;
    use super::*;
    use crate::covers::{trial_rng, validate, DEFAULT_PRECISION_CAP};

    fn x() -> MicroXApprox {
        build_x(2, 600).unwrap()
    }

    /// Z'_i recomputed from the definitions with no shared helpers.
    fn brute_z_prime(fam: &PlacedFamily, cover: &CoverAttempt, shifts: &[Shift], window: u64) -> Vec<BTreeSet<u64>> {
        // copies[i][p] = r_i + I_p over every placed p
        let copies: Vec<Vec<(u64, Interval)>> = shifts
            .iter()
            .map(|r| fam.placements().iter().map(|p| (p.a, p.interval.shift(&r.value))).collect())
            .collect();
        let js: Vec<(u64, &Interval)> = cover.intervals().iter().map(|(k, j)| (*k, j)).collect();
        (0..shifts.len())
            .map(|i| {
                let z: Vec<&Interval> = copies[i]
                    .iter()
                    .filter(|(a, c)| {
                        *a <= window
                            && js.iter().filter(|(_, j)| c.intersects(j)).all(|(_, j)| {
                                let same = copies[i].iter().filter(|(_, b)| b.intersects(j)).count();
                                let later = copies[i + 1..].iter().flatten().any(|(_, b)| b.intersects(j));
                                same == 1 && !later
                            })
                    })
                    .map(|(_, c)| c)
                    .collect();
                js.iter().filter(|(_, j)| z.iter().any(|c| c.intersects(j))).map(|(k, _)| *k).collect()
            })
            .collect()
    }

    #[test]
    fn single_shift_is_trivially_disjoint() {
        let x = x();
        let fam = shift_family(&x, 1, 2).unwrap();
        let mut rng = trial_rng(3, 0);
        let shifts = clustered_shifts(&mut rng, 1, 2, 64).unwrap();
        let cover = premise_cover(&mut rng, fam, &shifts, 600, 0).unwrap();
        let e = shift_family_experiment(&x, &shifts, &cover, (1, 2), 600).unwrap();
        assert!(e.pairwise_disjoint && e.pairs.is_empty());
        assert!(!e.premise_void);
        let s = &e.sets[0];
        // one copy per index: φ is unique and bounded
        assert_eq!(s.z, s.y);
        assert!(s.phi.iter().all(|p| p.hits == 1 && p.k < p.a));
        assert!(s.phi_injective && s.phi_bounded);
    }

    #[test]
    fn three_shifts_match_exact_scan() {
        let x = x();
        let fam = shift_family(&x, 1, 2).unwrap();
        for trial in 0..3 {
            let mut rng = trial_rng(11, trial);
            let shifts = clustered_shifts(&mut rng, 3, 2, 64).unwrap();
            let cover = premise_cover(&mut rng, fam, &shifts, 600, 40).unwrap();
            assert!(validate(&cover, DEFAULT_PRECISION_CAP).all_ok());
            let e = shift_family_experiment(&x, &shifts, &cover, (1, 2), 600).unwrap();
            let brute = brute_z_prime(fam, &cover, &shifts, 600);
            for (s, b) in e.sets.iter().zip(&brute) {
                assert_eq!(&s.z_prime, b);
                assert!(s.z.is_subset(&s.y));
            }
            assert!(e.pairwise_disjoint);
            assert!(e.pairs.iter().all(|p| p.relevant && p.q_prefix.len() == NONDEGENERATE_Q_LEN));
            if !e.premise_void {
                assert!(e.phi_ok());
            }
        }
    }

    #[test]
    fn last_shift_has_z_equal_y() {
        let x = x();
        let fam = shift_family(&x, 1, 2).unwrap();
        let mut rng = trial_rng(5, 1);
        let shifts = clustered_shifts(&mut rng, 4, 2, 64).unwrap();
        let cover = premise_cover(&mut rng, fam, &shifts, 600, 10).unwrap();
        let e = shift_family_experiment(&x, &shifts, &cover, (1, 2), 600).unwrap();
        let last = e.sets.last().unwrap();
        assert_eq!(last.z, last.y);
    }

    #[test]
    fn rejects_bad_shift_families() {
        let x = x();
        let cover = CoverAttempt::empty(Constraint::geometric(Rational::frac(1, 7)), 10);
        let a = Shift::new(Rational::frac(1, 3), 0, 64).unwrap();
        let b = Shift::new(Rational::frac(1, 4), 0, 64).unwrap();
        assert!(shift_family_experiment(&x, &[a.clone(), b], &cover, (1, 2), 100).is_err());
        assert!(shift_family_experiment(&x, &[a.clone()], &cover, (5, 2), 100).is_err());
        // a difference with a finite, short expansion exhausts nothing but one with too few digits does
        let short = Shift::new(Rational::frac(1, 3), 0, 4).unwrap();
        let close = Shift::new(&Rational::frac(1, 3) + &Rational::frac(1, 7 * 7 * 7 * 7 * 5), 0, 4).unwrap();
        assert!(matches!(
            shift_family_experiment(&x, &[short, close], &cover, (1, 2), 100),
            Err(Error::PrefixExhausted { .. })
        ));
    }

    #[test]
    fn telemetry_minimum() {
        let set: BTreeSet<u64> = [4, 12, 20].into_iter().collect();
        let t = telemetry(&set, 4, 23);
        assert_eq!(t.count, 3);
        assert_eq!(t.ratio_at_window, Rational::frac(3, 24));
        // 1/12 at j = 11 is the smallest prefix ratio
        assert_eq!(t.min_prefix_ratio, Rational::frac(1, 12));
        assert_eq!(t.argmin, 11);
    }
}
