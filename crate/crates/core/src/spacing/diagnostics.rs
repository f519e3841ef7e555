//! Per-block diagnostics for the three steps of the lower-density argument.

use std::collections::BTreeSet;

use serde::Serialize;

use super::digits_q::{q_sequence, QSequence};
use super::placement::PlacedFamily;
use super::selection::{a_prime_member, compute_y, compute_z, Shift};
use super::tree::{pow3, SpacingTree};
use crate::covers::CoverAttempt;
use crate::error::{Error, Result};
use crate::exact::Rational;

/// `α = Σ_{i<=k} (1/3)(2/3)^i = 1 - (2/3)^(k+1)`.
pub fn alpha(k: u64) -> Rational {
    Rational::one() - Rational::frac(2, 3).pow(k + 1)
}

/// Least `k` with `α(k)^(s+1) > 1 - δ`.
pub fn k_for_delta(delta: &Rational, s: u64) -> Result<u64> {
    if !delta.is_positive() || delta >= &Rational::one() {
        return Err(Error::Precondition(format!("delta {delta} is not in (0, 1)")));
    }
    let target = Rational::one() - delta.clone();
    let mut k = 0;
    while alpha(k).pow(s + 1) <= target {
        k += 1;
    }
    Ok(k)
}

#[derive(Clone, Debug, Serialize)]
pub struct Step1Entry {
    pub d: u64,
    /// placed intervals of the block met by `J_d`
    pub hits: u64,
    /// `3^(n+m-d)`; absent when `d < m`
    pub bound: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Step1Report {
    /// cover indices `d < n + m + 1`
    pub small_indices: Vec<Step1Entry>,
    pub per_index_bound_ok: bool,
    pub small_union_hits: u64,
    pub small_union_below_half: bool,
    /// largest number of block intervals met by a single `J_d`, `d >= n + m + 1`
    pub large_index_max_hits: u64,
    pub y_at_least_half: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PTable {
    pub l: Vec<u64>,
    /// `p[i][j]` for relevant shift `i` and `j <= k`
    pub p: Vec<Vec<u64>>,
    /// `p(s, k)`
    pub p_last: u64,
    pub p_prime: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BTally {
    pub i: usize,
    pub j: u64,
    pub level: u64,
    /// `low` selects ancestors with index below `3^p`, `high` those in `[3^p, 2·3^p)`
    pub class: &'static str,
    pub digit_at_level: u8,
    /// the case's consequence (`≠ 0` for low, `≠ 6` for high) under this reading
    pub consequence_holds: bool,
    /// whether level `p` lies above the block's terminals
    pub defined: bool,
    pub members: u64,
    pub fraction: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct BReading {
    /// `digit_parity` reads the case conditions on base-7 digits, `index_parity` on the indices themselves
    pub reading: &'static str,
    pub tallies: Vec<BTally>,
    pub b_count: u64,
    pub b_fraction: Rational,
    /// members of `B` that meet some shifted copy `r_i + I_a'`
    pub a_prime_violations: Vec<u64>,
    /// members of `Y ∩ B` missing from `Z`
    pub yb_not_in_z: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Step2Report {
    pub k: u64,
    /// positions in the input list of the shifts with `r < 7^-m`
    pub relevant_shifts: Vec<usize>,
    pub alpha: Rational,
    /// `α^(s+1)`
    pub predicted_fraction: Rational,
    pub q: Vec<QSequence>,
    pub p_table: PTable,
    pub n_exceeds_p: bool,
    pub a_prime_in_block: u64,
    pub readings: Vec<BReading>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Step3Report {
    /// members of `Y` met by some `J_d` with `d < p' + m`
    pub f: Vec<u64>,
    pub f_within_bound: bool,
    #[serde(rename = "N")]
    pub big_n: u64,
    pub n_exceeds_big_n: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StepReport {
    pub n: u32,
    pub t_n: u64,
    pub block_size: u64,
    pub y_in_block: u64,
    pub y_fraction: Rational,
    pub z_in_block: u64,
    pub z_fraction: Rational,
    pub step1: Step1Report,
    /// absent when no shift satisfies `r < 7^-m`
    pub step2: Option<Step2Report>,
    pub step3: Option<Step3Report>,
}

fn ratio(num: u64, den: u64) -> Rational {
    Rational::new(num, den.max(1)).expect("positive denominator")
}

pub fn step_diagnostics(
    placed: &PlacedFamily,
    cover: &CoverAttempt,
    shifts: &[Shift],
    n: u32,
    k: u64,
) -> Result<StepReport> {
    let block = placed.block(n).ok_or_else(|| {
        Error::WindowInsufficient(format!("block {n} is not fully placed ({} placements)", placed.len()))
    })?;
    let m = placed.tree().base_exponent();
    let size = block.members.len() as u64;
    let members: BTreeSet<u64> = block.members.iter().copied().collect();

    let y = compute_y(placed, cover, u64::MAX);
    let z = compute_z(placed, cover, shifts, u64::MAX)?;
    let y_in = members.intersection(&y).count() as u64;
    let z_in = members.intersection(&z).count() as u64;

    let step1 = step1(placed, cover, &members, n, m, y_in);

    let relevant: Vec<usize> = (0..shifts.len()).filter(|&i| shifts[i].relevant_at(m)).collect();
    let (step2, step3) = if relevant.is_empty() {
        (None, None)
    } else {
        let rel: Vec<&Shift> = relevant.iter().map(|&i| &shifts[i]).collect();
        let s2 = step2(placed, shifts, &rel, relevant.clone(), &block.members, n, k, &y, &z)?;
        let s3 = step3(placed, cover, &y, m, &s2, n);
        (Some(s2), Some(s3))
    };

    Ok(StepReport {
        n,
        t_n: block.t_n,
        block_size: size,
        y_in_block: y_in,
        y_fraction: ratio(y_in, size),
        z_in_block: z_in,
        z_fraction: ratio(z_in, size),
        step1,
        step2,
        step3,
    })
}

fn step1(placed: &PlacedFamily, cover: &CoverAttempt, members: &BTreeSet<u64>, n: u32, m: u64, y_in: u64) -> Step1Report {
    let cutoff = n as u64 + m + 1;
    let block_hits = |j| -> Vec<u64> {
        placed.hits(j).into_iter().map(|i| placed.placements()[i].a).filter(|a| members.contains(a)).collect()
    };
    let mut small = Vec::new();
    let mut union = BTreeSet::new();
    let mut large_max = 0;
    for (d, j) in cover.intervals() {
        let hits = block_hits(j);
        if *d < cutoff {
            let bound = (*d >= m).then(|| pow3((n as u64 + m - d) as u32));
            small.push(Step1Entry { d: *d, hits: hits.len() as u64, bound });
            union.extend(hits);
        } else {
            large_max = large_max.max(hits.len() as u64);
        }
    }
    let size = members.len() as u64;
    Step1Report {
        per_index_bound_ok: small.iter().all(|e| e.bound.is_some_and(|b| e.hits <= b)),
        small_indices: small,
        small_union_hits: union.len() as u64,
        small_union_below_half: (2 * union.len() as u64) < size,
        large_index_max_hits: large_max,
        y_at_least_half: 2 * y_in >= size,
    }
}

fn exhausted(stream_len: usize) -> Error {
    Error::PrefixExhausted { needed: stream_len + 1, available: stream_len }
}

#[allow(clippy::too_many_arguments)]
fn step2(
    placed: &PlacedFamily,
    all_shifts: &[Shift],
    rel: &[&Shift],
    relevant: Vec<usize>,
    block: &[u64],
    n: u32,
    k: u64,
    y: &BTreeSet<u64>,
    z: &BTreeSet<u64>,
) -> Result<Step2Report> {
    let m = placed.tree().base_exponent();
    let streams = rel.iter().map(|s| s.stream_at(m)).collect::<Result<Vec<_>>>()?;
    let qs = streams.iter().map(|d| q_sequence(d, d.len() + 2)).collect::<Result<Vec<_>>>()?;
    let q_at = |i: usize, idx: u64| -> Result<u64> {
        qs[i].indices.get(idx as usize).copied().ok_or_else(|| exhausted(streams[i].len()))
    };

    let mut l = vec![0u64];
    let mut p: Vec<Vec<u64>> = vec![(0..=k).map(|j| q_at(0, j)).collect::<Result<_>>()?];
    let mut p_prime = q_at(0, k + 1)?;
    for i in 1..rel.len() {
        let prev = p[i - 1][k as usize];
        let li = qs[i].indices.iter().position(|&q| q > prev).ok_or_else(|| exhausted(streams[i].len()))? as u64;
        p.push((0..=k).map(|j| q_at(i, li + j)).collect::<Result<_>>()?);
        p_prime = p_prime.max(q_at(i, li + k + 1)?);
        l.push(li);
    }
    p_prime += 1;
    let p_last = p[rel.len() - 1][k as usize];

    let positions: Vec<usize> = block.iter().map(|a| placed.position_of(*a).expect("block member placed")).collect();
    let a_prime: BTreeSet<u64> = positions
        .iter()
        .filter(|&&pos| a_prime_member(placed, pos, all_shifts))
        .map(|&pos| placed.placements()[pos].a)
        .collect();

    let readings = ["digit_parity", "index_parity"]
        .into_iter()
        .map(|reading| {
            let by_digit = reading == "digit_parity";
            let mut tallies = Vec::new();
            let mut b: Option<BTreeSet<u64>> = None;
            for (i, stream) in streams.iter().enumerate() {
                let mut b_i = BTreeSet::new();
                for j in 0..=k {
                    let level = p[i][j as usize];
                    let digit = stream.digit(level as usize).unwrap_or(0);
                    let low = if i == 0 && j == 0 {
                        true
                    } else if l[i] + j == 0 {
                        // q(i, -1) read as even
                        true
                    } else {
                        let prev = qs[i].indices[(l[i] + j - 1) as usize];
                        let parity = if by_digit { stream.digit(prev as usize).unwrap_or(0) as u64 } else { prev };
                        parity % 2 == 0
                    };
                    let consequence_holds = match (low, by_digit) {
                        (true, true) => digit != 0,
                        (false, true) => digit != 6,
                        (true, false) => level != 0,
                        (false, false) => level != 6,
                    };
                    let defined = level <= n as u64;
                    let mut count = 0;
                    if defined {
                        let pl = pow3(level as u32);
                        for &pos in &positions {
                            let pm = &placed.placements()[pos];
                            let anc = SpacingTree::ancestor_index(pm.level, pm.node, level as u32);
                            let inside = if low { anc < pl } else { pl <= anc && anc < 2 * pl };
                            if inside {
                                count += 1;
                                b_i.insert(pm.a);
                            }
                        }
                    }
                    tallies.push(BTally {
                        i,
                        j,
                        level,
                        class: if low { "low" } else { "high" },
                        digit_at_level: digit,
                        consequence_holds,
                        defined,
                        members: count,
                        fraction: ratio(count, block.len() as u64),
                    });
                }
                b = Some(match b {
                    None => b_i,
                    Some(prev) => prev.intersection(&b_i).copied().collect(),
                });
            }
            let b = b.unwrap_or_default();
            BReading {
                reading,
                tallies,
                b_count: b.len() as u64,
                b_fraction: ratio(b.len() as u64, block.len() as u64),
                a_prime_violations: b.difference(&a_prime).copied().collect(),
                yb_not_in_z: b.iter().filter(|a| y.contains(a) && !z.contains(a)).copied().collect(),
            }
        })
        .collect();

    let s = rel.len() as u64 - 1;
    Ok(Step2Report {
        k,
        relevant_shifts: relevant,
        alpha: alpha(k),
        predicted_fraction: alpha(k).pow(s + 1),
        q: qs,
        p_table: PTable { l, p, p_last, p_prime },
        n_exceeds_p: n as u64 > p_last,
        a_prime_in_block: a_prime.len() as u64,
        readings,
    })
}

fn step3(placed: &PlacedFamily, cover: &CoverAttempt, y: &BTreeSet<u64>, m: u64, s2: &Step2Report, n: u32) -> Step3Report {
    let p_prime = s2.p_table.p_prime;
    let mut f = BTreeSet::new();
    for (_, j) in cover.entries_between(0, p_prime + m) {
        for pos in placed.hits(j) {
            let a = placed.placements()[pos].a;
            if y.contains(&a) {
                f.insert(a);
            }
        }
    }
    // a placed at level i >= 1 belongs to L_(i-1)
    let last_block = f
        .iter()
        .filter_map(|a| placed.position_of(*a))
        .filter_map(|pos| placed.placements()[pos].level.checked_sub(1))
        .max();
    let big_n = s2.p_table.p_last.max(last_block.map_or(0, u64::from)) + 1;
    Step3Report {
        f_within_bound: f.len() as u64 <= p_prime,
        f: f.into_iter().collect(),
        big_n,
        n_exceeds_big_n: n as u64 > big_n,
    }
}

/// `card(S ∩ (a_(t_n)+1)) / (a_(t_n)+1)` at every placed block boundary `n >= 1`.
pub fn block_boundary_ratios(placed: &PlacedFamily, set: &BTreeSet<u64>) -> Vec<(u32, Rational)> {
    let mut out = Vec::new();
    let mut n = 1;
    while let Some(p) = placed.placements().get(super::tree::block_offset(n) as usize) {
        let count = set.range(..=p.a).count() as u64;
        out.push((n, ratio(count, p.a + 1)));
        n += 1;
    }
    out
}
