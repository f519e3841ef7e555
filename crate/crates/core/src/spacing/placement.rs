use serde::Serialize;

use super::tree::{block_offset, pow3, SpacingTree, TerminalRef};
use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};
use crate::omega::OmegaSet;

/// One placed interval `I_a ⊂ K_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub a: u64,
    pub level: u32,
    pub node: u64,
    pub interval: Interval,
}

/// Intervals `I_a` for the first elements of `A`, one per `𝒦` member.
#[derive(Clone, Debug)]
pub struct PlacedFamily {
    tree: SpacingTree,
    index_set: OmegaSet,
    placements: Vec<Placement>,
    /// placement positions sorted by left endpoint
    by_lo: Vec<usize>,
}

/// `L_n`: the members of `A` placed in level-`(n+1)` terminals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockIndex {
    pub n: u32,
    pub t_n: u64,
    pub members: Vec<u64>,
}

pub fn place_intervals(tree: &SpacingTree, index_set: &OmegaSet, count: usize) -> Result<PlacedFamily> {
    let m = tree.base_exponent();
    match index_set.min() {
        Some(min) if min > m => {}
        Some(min) => return Err(Error::Precondition(format!("min A = {min} must exceed m = {m}"))),
        None => return Err(Error::Precondition("A is empty".into())),
    }
    if count as u64 > tree.terminal_count() {
        return Err(Error::Precondition(format!(
            "depth {} holds {} terminals, {count} requested",
            tree.depth(),
            tree.terminal_count()
        )));
    }
    let elements = index_set.first_n(count);
    if elements.len() < count {
        return Err(Error::Precondition(format!("A has only {} elements, {count} requested", elements.len())));
    }
    let placements: Vec<Placement> = tree
        .terminals()
        .into_iter()
        .zip(elements)
        .map(|(TerminalRef { level, index, interval }, a)| {
            let lo = interval.lo().clone();
            Placement { a, level, node: index, interval: Interval::with_length(lo, &Rational::inv_pow7(a)) }
        })
        .collect();
    let mut by_lo: Vec<usize> = (0..placements.len()).collect();
    by_lo.sort_by(|&x, &y| placements[x].interval.lo().cmp(placements[y].interval.lo()));
    Ok(PlacedFamily { tree: tree.clone(), index_set: index_set.clone(), placements, by_lo })
}

/// Smallest depth whose terminals can host `count` placements.
pub fn depth_for_count(count: usize) -> u32 {
    let mut depth = 0;
    while ((pow3(depth + 1) - 1) / 2) < count as u64 {
        depth += 1;
    }
    depth
}

impl PlacedFamily {
    pub fn tree(&self) -> &SpacingTree {
        &self.tree
    }

    pub fn index_set(&self) -> &OmegaSet {
        &self.index_set
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.placements.iter().map(|p| p.a)
    }

    pub fn position_of(&self, a: u64) -> Option<usize> {
        self.placements.binary_search_by_key(&a, |p| p.a).ok()
    }

    pub fn interval(&self, a: u64) -> Option<&Interval> {
        self.position_of(a).map(|i| &self.placements[i].interval)
    }

    /// The `𝒦` members used, in enumeration order.
    pub fn terminal_order(&self) -> Vec<TerminalRef> {
        self.placements
            .iter()
            .map(|p| TerminalRef { level: p.level, index: p.node, interval: self.tree.node(p.level, p.node).clone() })
            .collect()
    }

    /// Positions of placed intervals meeting `j` (closed semantics).
    pub fn hits(&self, j: &Interval) -> Vec<usize> {
        // placed intervals are pairwise disjoint, so sorting by lo also sorts by hi
        let start = self.by_lo.partition_point(|&i| self.placements[i].interval.hi() < j.lo());
        self.by_lo[start..]
            .iter()
            .take_while(|&&i| self.placements[i].interval.lo() <= j.hi())
            .copied()
            .collect()
    }

    /// Positions `p` with `(r + I_p) ∩ j ≠ ∅`.
    pub fn hits_shifted(&self, j: &Interval, r: &Rational) -> Vec<usize> {
        self.hits(&j.shift(&-r))
    }

    /// `L_n`, if fully placed.
    pub fn block(&self, n: u32) -> Option<BlockIndex> {
        let t_n = block_offset(n);
        let end = block_offset(n + 1);
        if end as usize >= self.placements.len() {
            return None;
        }
        let members = self.placements[(t_n + 1) as usize..=end as usize].iter().map(|p| p.a).collect();
        Some(BlockIndex { n, t_n, members })
    }

    /// Exact check of the placement invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let m = self.tree.base_exponent();
        for (i, p) in self.placements.iter().enumerate() {
            if p.interval.length() != Rational::inv_pow7(p.a) {
                return Err(format!("|I_{}| is wrong", p.a));
            }
            if !self.tree.node(p.level, p.node).contains(&p.interval) {
                return Err(format!("I_{} escapes its terminal", p.a));
            }
            if p.a < m + i as u64 + 1 {
                return Err(format!("a_{i} = {} is below m + i + 1", p.a));
            }
        }
        for w in self.by_lo.windows(2) {
            let (x, y) = (&self.placements[w[0]].interval, &self.placements[w[1]].interval);
            if x.intersects(y) {
                return Err("two placed intervals meet".into());
            }
        }
        Ok(())
    }
}

impl Serialize for PlacedFamily {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            m: u64,
            depth: u32,
            #[serde(rename = "A")]
            index_set: &'a OmegaSet,
            placements: &'a [Placement],
        }
        Repr {
            m: self.tree.base_exponent(),
            depth: self.tree.depth(),
            index_set: &self.index_set,
            placements: &self.placements,
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tree::build_k_hierarchy;
    use super::*;

    fn unit() -> Interval {
        Interval::new(Rational::zero(), Rational::one()).unwrap()
    }

    #[test]
    fn first_placements_for_successors() {
        let tree = build_k_hierarchy(&unit(), 0, 1).unwrap();
        let fam = place_intervals(&tree, &OmegaSet::progression(1, 1), 4).unwrap();
        assert_eq!(fam.interval(1).unwrap(), &Interval::new(Rational::frac(4, 7), Rational::frac(5, 7)).unwrap());
        assert_eq!(fam.interval(2).unwrap(), &Interval::new(Rational::frac(4, 49), Rational::frac(5, 49)).unwrap());
        assert!(tree.node(1, 9).contains(fam.interval(2).unwrap()));
        fam.check_invariants().unwrap();
    }

    #[test]
    fn preconditions() {
        let tree = build_k_hierarchy(&unit(), 0, 1).unwrap();
        assert!(place_intervals(&tree, &OmegaSet::all(), 2).is_err());
        assert!(place_intervals(&tree, &OmegaSet::progression(1, 1), 5).is_err());
        assert!(place_intervals(&tree, &OmegaSet::finite([1, 2]), 3).is_err());
    }

    #[test]
    fn blocks() {
        let tree = build_k_hierarchy(&unit(), 0, 3).unwrap();
        let fam = place_intervals(&tree, &OmegaSet::progression(1, 1), 40).unwrap();
        let b1 = fam.block(1).unwrap();
        assert_eq!(b1.t_n, 3);
        assert_eq!(b1.members.len(), 9);
        for a in &b1.members {
            let p = &fam.placements()[fam.position_of(*a).unwrap()];
            assert_eq!(p.level, 2);
        }
        assert!(fam.block(2).unwrap().members.len() == 27);
        assert!(fam.block(3).is_none());
    }

    #[test]
    fn hits_match_linear_scan() {
        let tree = build_k_hierarchy(&unit(), 0, 3).unwrap();
        let fam = place_intervals(&tree, &OmegaSet::progression(1, 1), 40).unwrap();
        let probes = [
            Interval::new(Rational::frac(4, 7), Rational::frac(4, 7)).unwrap(),
            Interval::new(Rational::zero(), Rational::frac(1, 7)).unwrap(),
            Interval::new(Rational::frac(1, 3), Rational::frac(2, 3)).unwrap(),
            unit(),
        ];
        for j in &probes {
            let mut fast = fam.hits(j);
            fast.sort();
            let slow: Vec<usize> = (0..fam.len()).filter(|&i| fam.placements()[i].interval.intersects(j)).collect();
            assert_eq!(fast, slow);
        }
    }
}
