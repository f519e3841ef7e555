use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Interval, Rational};

pub(crate) fn pow3(k: u32) -> u64 {
    3u64.pow(k)
}

/// The four-children hierarchy `K^i_j`, `i <= depth`, `j < 4·3^i`.
///
/// Level `k` nodes have length `7^-(k+m+1)`. The children of `K^(k-1)_l`
/// (only `l < 3^k` have children) are laid out left to right as
/// `l, 2·3^k+l, 3·3^k+l, 3^k+l`, separated by gaps equal to their length,
/// which exactly fills the parent. Nodes with `j >= 3·3^k` are terminal.
#[derive(Clone, Debug, Serialize)]
pub struct SpacingTree {
    root: Interval,
    base_exponent: u64,
    depth: u32,
    levels: Vec<Vec<Interval>>,
}

/// A terminal member of the hierarchy (a `𝒦` member).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TerminalRef {
    pub level: u32,
    pub index: u64,
    pub interval: Interval,
}

pub fn build_k_hierarchy(root: &Interval, m: u64, depth: u32) -> Result<SpacingTree> {
    if root.length() != Rational::inv_pow7(m) {
        return Err(Error::Precondition(format!(
            "root length {} differs from 7^-{m}",
            root.length()
        )));
    }
    if depth > 30 {
        return Err(Error::Precondition(format!("depth {depth} exceeds supported range")));
    }
    let mut levels: Vec<Vec<Interval>> = Vec::with_capacity(depth as usize + 1);
    for k in 0..=depth {
        let p = pow3(k);
        let len = Rational::inv_pow7(k as u64 + m + 1);
        let offsets: Vec<Rational> = (0..4).map(|slot| &len * &Rational::from(2 * slot as i64)).collect();
        let mut nodes: Vec<Option<Interval>> = vec![None; (4 * p) as usize];
        for l in 0..p {
            let parent = if k == 0 { root } else { &levels[k as usize - 1][l as usize] };
            let order = [l, 2 * p + l, 3 * p + l, p + l];
            for (slot, &j) in order.iter().enumerate() {
                let lo = parent.lo() + &offsets[slot];
                nodes[j as usize] = Some(Interval::with_length(lo, &len));
            }
        }
        levels.push(nodes.into_iter().map(|n| n.expect("every index placed")).collect());
    }
    Ok(SpacingTree { root: root.clone(), base_exponent: m, depth, levels })
}

impl SpacingTree {
    pub fn root(&self) -> &Interval {
        &self.root
    }

    pub fn base_exponent(&self) -> u64 {
        self.base_exponent
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn level(&self, i: u32) -> &[Interval] {
        &self.levels[i as usize]
    }

    pub fn node(&self, i: u32, j: u64) -> &Interval {
        &self.levels[i as usize][j as usize]
    }

    pub fn node_length(&self, i: u32) -> Rational {
        Rational::inv_pow7(i as u64 + self.base_exponent + 1)
    }

    pub fn is_terminal(i: u32, j: u64) -> bool {
        j >= 3 * pow3(i)
    }

    /// Index of the level-`p` ancestor of `K^k_j` (`p < k`), or `j` itself when `p == k`.
    pub fn ancestor_index(k: u32, j: u64, p: u32) -> u64 {
        assert!(p <= k);
        if p == k {
            j
        } else {
            j % pow3(p + 1)
        }
    }

    /// `𝒦` members sorted by non-increasing length, ties by ascending index.
    pub fn terminals(&self) -> Vec<TerminalRef> {
        (0..=self.depth)
            .flat_map(|i| {
                let p = pow3(i);
                (3 * p..4 * p).map(move |j| (i, j))
            })
            .map(|(i, j)| TerminalRef { level: i, index: j, interval: self.node(i, j).clone() })
            .collect()
    }

    /// `t_depth + 1 = 1 + 3 + ... + 3^depth`.
    pub fn terminal_count(&self) -> u64 {
        (pow3(self.depth + 1) - 1) / 2
    }

    /// Exact check of every structural invariant; returns the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let m = self.base_exponent;
        for (i, nodes) in self.levels.iter().enumerate() {
            let i = i as u32;
            let len = Rational::inv_pow7(i as u64 + m + 1);
            if nodes.len() as u64 != 4 * pow3(i) {
                return Err(format!("level {i} has {} nodes", nodes.len()));
            }
            for (j, node) in nodes.iter().enumerate() {
                if node.length() != len {
                    return Err(format!("K^{i}_{j} has length {}", node.length()));
                }
                let parent = if i == 0 { &self.root } else { self.node(i - 1, j as u64 % pow3(i)) };
                if !parent.contains(node) {
                    return Err(format!("K^{i}_{j} escapes its parent"));
                }
                if i > 0 && Self::is_terminal(i - 1, j as u64 % pow3(i)) {
                    return Err(format!("K^{i}_{j} lies under a terminal node"));
                }
            }
            let p = pow3(i);
            for l in 0..p {
                let parent = if i == 0 { &self.root } else { self.node(i - 1, l) };
                if self.node(i, l).lo() != parent.lo() {
                    return Err(format!("inf K^{i}_{l} differs from its parent"));
                }
                if self.node(i, p + l).hi() != parent.hi() {
                    return Err(format!("sup K^{i}_{} differs from its parent", p + l));
                }
            }
            let mut sorted: Vec<&Interval> = nodes.iter().collect();
            sorted.sort_by(|a, b| a.lo().cmp(b.lo()));
            for w in sorted.windows(2) {
                if w[0].distance(w[1]) < len {
                    return Err(format!("two level-{i} nodes are closer than {len}"));
                }
            }
        }
        // no node of a deeper level sits inside a terminal node
        for i in 1..=self.depth {
            for t in (3 * pow3(i - 1))..(4 * pow3(i - 1)) {
                let term = self.node(i - 1, t);
                if self.level(i).iter().any(|n| term.contains(n)) {
                    return Err(format!("terminal K^{}_{t} has a child", i - 1));
                }
            }
        }
        Ok(())
    }
}

/// `t_n = 3^0 + ... + 3^n - 1`.
pub fn block_offset(n: u32) -> u64 {
    (pow3(n + 1) - 3) / 2
}
