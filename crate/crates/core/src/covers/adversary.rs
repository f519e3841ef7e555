use num_integer::Roots;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Constraint, CoverAttempt};
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::OmegaSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// cycle through the targets, longest first, anchoring each `J_d` on one
    GreedyHit,
    /// pick a random target for each admitted index
    DensityBudget,
    /// random placement modes around targets and anchors
    Random,
}

/// Upper bound `j ↦ max card(D ∩ (j+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    Sqrt,
    Fraction(u64, u64),
    Unlimited,
}

impl Budget {
    pub fn allowance(&self, j: u64) -> u64 {
        match *self {
            Budget::Sqrt => j.sqrt(),
            Budget::Fraction(p, q) => ((p as u128 * (j as u128 + 1)) / q as u128) as u64,
            Budget::Unlimited => j + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryParams {
    pub window_end: u64,
    pub constraint: Constraint,
    pub budget: Budget,
    /// least admissible index (`D ⊂ ω∖m`)
    pub min_index: u64,
    /// intervals the adversary aims at, typically placed `I_a`
    pub targets: Vec<Interval>,
    /// fallback points of interest when there are no targets
    pub anchors: Vec<Interval>,
}

/// ChaCha8 generator for trial `trial` of a seeded experiment.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A deterministic cover attempt that passes validation.
///
/// Every admitted index gets an interval of length `eps^(d+1)`, or
/// `eps^⌈ln(d+2)⌉` under the logarithmic constraint.
pub fn adversary_generate(strategy: Strategy, params: &AdversaryParams, seed: u64) -> Result<CoverAttempt> {
    if let Budget::Fraction(p, q) = params.budget {
        if q == 0 || p > q {
            return Err(Error::InfeasibleBudget(format!("fraction {p}/{q} is not in [0, 1]")));
        }
    }
    if params.window_end < params.min_index {
        return Err(Error::InfeasibleBudget(format!(
            "window ends at {} before the least index {}",
            params.window_end, params.min_index
        )));
    }
    let eps = params.constraint.eps();
    if !eps.is_positive() || eps > &Rational::one() {
        return Err(Error::Precondition(format!("eps = {eps} is not in (0, 1]")));
    }
    if strategy != Strategy::Random && params.targets.is_empty() {
        return Err(Error::Precondition("strategy needs at least one target".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut targets = params.targets.clone();
    if strategy == Strategy::GreedyHit {
        targets.sort_by(|x, y| y.length().cmp(&x.length()).then_with(|| x.lo().cmp(y.lo())));
    }
    let mut by_lo = params.targets.clone();
    by_lo.sort_by(|x, y| x.lo().cmp(y.lo()));

    let mut members = Vec::new();
    let mut intervals = Vec::new();
    for d in params.min_index..=params.window_end {
        if members.len() as u64 + 1 > params.budget.allowance(d) {
            continue;
        }
        let len = params.constraint.safe_length(d);
        let j = match strategy {
            Strategy::GreedyHit => Interval::with_length(targets[members.len() % targets.len()].lo().clone(), &len),
            Strategy::DensityBudget => {
                let t = targets.choose(&mut rng).expect("nonempty");
                centered(t, &len)
            }
            Strategy::Random => random_interval(&mut rng, &by_lo, &params.anchors, &len),
        };
        members.push(d);
        intervals.push((d, j));
    }
    Ok(CoverAttempt::new(OmegaSet::finite(members), params.constraint.clone(), params.window_end, intervals))
}

fn centered(t: &Interval, len: &Rational) -> Interval {
    let mid = &(t.lo() + t.hi()) * &Rational::frac(1, 2);
    Interval::with_length(&mid - &(len * &Rational::frac(1, 2)), len)
}

fn random_interval(rng: &mut ChaCha8Rng, by_lo: &[Interval], anchors: &[Interval], len: &Rational) -> Interval {
    let pool = if by_lo.is_empty() { anchors } else { by_lo };
    if pool.is_empty() {
        // a uniformly random grid point of [0, 1] at a scale finer than the interval
        let den: u64 = 1 << 40;
        let lo = Rational::new(rng.gen_range(0..den), den).expect("nonzero");
        return Interval::with_length(lo, len);
    }
    let k = rng.gen_range(0..pool.len());
    let t = &pool[k];
    match rng.gen_range(0..4) {
        0 => Interval::with_length(t.lo().clone(), len),
        1 => Interval::with_length(t.hi() - len, len),
        2 => centered(t, len),
        // start at the target's right end and reach toward its neighbor
        _ => Interval::with_length(t.hi().clone(), len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::{validate, DEFAULT_PRECISION_CAP};

    fn targets() -> Vec<Interval> {
        (1..10).map(|k| Interval::with_length(Rational::frac(k, 10), &Rational::inv_pow7(k as u64))).collect()
    }

    fn params(budget: Budget, constraint: Constraint) -> AdversaryParams {
        AdversaryParams { window_end: 400, constraint, budget, min_index: 0, targets: targets(), anchors: vec![] }
    }

    #[test]
    fn sqrt_budget_is_sparse() {
        let p = params(Budget::Sqrt, Constraint::geometric(Rational::frac(1, 7)));
        let c = adversary_generate(Strategy::DensityBudget, &p, 1).unwrap();
        for j in 0..=400 {
            assert!(c.index_set().count_prefix(j) <= j.sqrt());
        }
        let r = c.index_set().count_prefix(400);
        assert_eq!(r, 20);
    }

    #[test]
    fn deterministic_for_a_seed() {
        for s in [Strategy::GreedyHit, Strategy::DensityBudget, Strategy::Random] {
            let p = params(Budget::Fraction(1, 3), Constraint::geometric(Rational::frac(1, 7)));
            assert_eq!(adversary_generate(s, &p, 7).unwrap(), adversary_generate(s, &p, 7).unwrap());
        }
        let p = params(Budget::Unlimited, Constraint::geometric(Rational::frac(1, 7)));
        assert_ne!(
            adversary_generate(Strategy::Random, &p, 1).unwrap(),
            adversary_generate(Strategy::Random, &p, 2).unwrap()
        );
    }

    #[test]
    fn greedy_hits_targets_and_validates() {
        for c in [Constraint::geometric(Rational::frac(1, 7)), Constraint::logarithmic(Rational::frac(1, 7))] {
            let mut p = params(Budget::Unlimited, c);
            p.window_end = 60;
            let cover = adversary_generate(Strategy::GreedyHit, &p, 0).unwrap();
            assert!(validate(&cover, DEFAULT_PRECISION_CAP).all_ok());
            for j in cover.intervals().values() {
                assert!(p.targets.iter().any(|t| t.intersects(j)));
            }
        }
    }

    #[test]
    fn random_covers_validate() {
        for seed in 0..5 {
            let mut p = params(Budget::Fraction(1, 2), Constraint::logarithmic(Rational::frac(1, 7)));
            p.window_end = 50;
            let cover = adversary_generate(Strategy::Random, &p, seed).unwrap();
            assert!(validate(&cover, DEFAULT_PRECISION_CAP).all_ok());
        }
    }

    #[test]
    fn infeasible() {
        let mut p = params(Budget::Fraction(3, 2), Constraint::geometric(Rational::frac(1, 7)));
        assert!(matches!(adversary_generate(Strategy::Random, &p, 0), Err(Error::InfeasibleBudget(_))));
        p.budget = Budget::Unlimited;
        p.min_index = 500;
        assert!(matches!(adversary_generate(Strategy::Random, &p, 0), Err(Error::InfeasibleBudget(_))));
    }

    #[test]
    fn trial_streams_differ() {
        let a: u64 = trial_rng(3, 0).gen();
        let b: u64 = trial_rng(3, 1).gen();
        assert_ne!(a, b);
        assert_eq!(a, trial_rng(3, 0).gen::<u64>());
    }
}
