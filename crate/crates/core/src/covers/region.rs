use serde::Serialize;

use super::CoverAttempt;
use crate::exact::{Interval, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageResult {
    pub covered: bool,
    /// closure of the leftmost maximal gap, when not covered
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncovered: Option<Interval>,
}

/// Whether the stored intervals up to the window end cover every region interval.
pub fn covers_region(cover: &CoverAttempt, region: &[Interval]) -> CoverageResult {
    let mut pieces: Vec<&Interval> = cover.entries_upto(cover.window_end()).map(|(_, j)| j).collect();
    pieces.sort_by(|x, y| x.lo().cmp(y.lo()));
    let mut targets: Vec<&Interval> = region.iter().collect();
    targets.sort_by(|x, y| x.lo().cmp(y.lo()));
    for r in targets {
        if let Some(gap) = first_gap(&pieces, r) {
            return CoverageResult { covered: false, uncovered: Some(gap) };
        }
    }
    CoverageResult { covered: true, uncovered: None }
}

fn first_gap(pieces: &[&Interval], r: &Interval) -> Option<Interval> {
    let start = pieces.partition_point(|p| p.hi() < r.lo());
    let mut cur: Rational = r.lo().clone();
    let mut idx = start;
    // the first step must contain `cur` itself; later steps may extend from a covered endpoint
    loop {
        let mut reach: Option<&Rational> = None;
        while idx < pieces.len() && pieces[idx].lo() <= &cur {
            if pieces[idx].hi() >= &cur && reach.is_none_or(|h| pieces[idx].hi() > h) {
                reach = Some(pieces[idx].hi());
            }
            idx += 1;
        }
        match reach {
            Some(h) if h >= r.hi() => return None,
            Some(h) if h > &cur => cur = h.clone(),
            _ => {
                let end = match pieces.get(idx) {
                    Some(p) if p.lo() < r.hi() => p.lo().clone(),
                    _ => r.hi().clone(),
                };
                return Some(Interval::new(cur, end).expect("gap endpoints ordered"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covers::Constraint;
    use crate::omega::OmegaSet;

    fn iv(a: i64, b: i64, den: i64) -> Interval {
        Interval::new(Rational::frac(a, den), Rational::frac(b, den)).unwrap()
    }

    fn cover(js: Vec<Interval>) -> CoverAttempt {
        let n = js.len() as u64;
        CoverAttempt::new(OmegaSet::all(), Constraint::geometric(Rational::frac(1, 7)), n, (0..n).zip(js))
    }

    #[test]
    fn two_halves_cover() {
        let r = covers_region(&cover(vec![iv(0, 1, 2), iv(1, 2, 2)]), &[iv(0, 1, 1)]);
        assert!(r.covered);
    }

    #[test]
    fn half_leaves_gap() {
        let r = covers_region(&cover(vec![iv(0, 1, 2)]), &[iv(0, 1, 1)]);
        assert_eq!(r.uncovered, Some(iv(1, 2, 2)));
    }

    #[test]
    fn leftmost_gap_and_uncovered_start() {
        let c = cover(vec![iv(1, 2, 10), iv(4, 6, 10), iv(5, 10, 10)]);
        assert_eq!(covers_region(&c, &[iv(0, 1, 1)]).uncovered, Some(iv(0, 1, 10)));
        assert_eq!(covers_region(&c, &[iv(1, 10, 10)]).uncovered, Some(iv(2, 4, 10)));
        assert!(covers_region(&c, &[iv(4, 10, 10), iv(1, 2, 10)]).covered);
        assert_eq!(covers_region(&c, &[iv(3, 3, 10)]).uncovered, Some(iv(3, 3, 10)));
    }

    #[test]
    fn ignores_entries_beyond_window() {
        let c = CoverAttempt::new(
            OmegaSet::all(),
            Constraint::geometric(Rational::frac(1, 7)),
            0,
            [(0, iv(0, 1, 2)), (1, iv(1, 2, 2))],
        );
        assert!(!covers_region(&c, &[iv(0, 1, 1)]).covered);
    }

    /// Oracle: a point is uncovered iff no piece contains it; probe a fine grid.
    fn grid_uncovered(c: &CoverAttempt, r: &Interval, den: i64) -> Vec<Rational> {
        let lo = (r.lo() * &Rational::from(den)).floor();
        let hi = (r.hi() * &Rational::from(den)).floor();
        let (lo, hi): (i64, i64) = (lo.try_into().unwrap(), hi.try_into().unwrap());
        (lo..=hi)
            .map(|k| Rational::frac(k, den))
            .filter(|x| r.contains_point(x) && !c.intervals().values().any(|j| j.contains_point(x)))
            .collect()
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_grid(raw in proptest::collection::vec((0i64..40, 0i64..8), 0..8)) {
            let js: Vec<Interval> = raw.iter().map(|&(a, l)| iv(a, a + l, 40)).collect();
            let c = cover(js);
            let region = iv(0, 40, 40);
            let res = covers_region(&c, &[region.clone()]);
            let holes = grid_uncovered(&c, &region, 80);
            proptest::prop_assert_eq!(res.covered, holes.is_empty());
            if let Some(gap) = res.uncovered {
                proptest::prop_assert!(gap.contains_point(&holes[0]) || gap.lo() == &holes[0]);
            }
        }
    }
}
