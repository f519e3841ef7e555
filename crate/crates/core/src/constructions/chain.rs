use serde::Serialize;

use super::micro_x::{child_index_set, MicroXApprox};
use crate::covers::{corollary_witness, CoverAttempt, HypothesisRecord};
use crate::error::{Error, Result};
use crate::exact::Interval;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainLink {
    pub n: u32,
    pub j: u64,
    pub interval: Interval,
}

/// The stored cover indices `d < j_n`, each checked disjoint from `I^n_(j_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelCertificate {
    pub n: u32,
    pub j: u64,
    pub disjoint_from: Vec<u64>,
    pub hypothesis: HypothesisRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessChain {
    pub chain: Vec<ChainLink>,
    pub certificates: Vec<LevelCertificate>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainFailure {
    pub level: u32,
    pub reason: String,
    pub hypothesis: Option<HypothesisRecord>,
}

/// A chain that reached the target depth, or the prefix built before a level failed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ChainOutcome {
    pub target_depth: u32,
    pub chain: WitnessChain,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<ChainFailure>,
}

impl ChainOutcome {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn into_result(self) -> Result<WitnessChain> {
        match self.failure {
            None => Ok(self.chain),
            Some(f) => Err(Error::WindowInsufficient(format!(
                "chain stopped at level {} after {} links: {}",
                f.level,
                self.chain.chain.len(),
                f.reason
            ))),
        }
    }
}

impl WitnessChain {
    /// Exact re-check of nesting, index membership and every listed disjointness fact.
    pub fn replay(&self, x: &MicroXApprox, cover: &CoverAttempt) -> bool {
        for (i, link) in self.chain.iter().enumerate() {
            if x.interval(link.n, link.j) != Some(&link.interval) || link.n as usize != i {
                return false;
            }
            if i > 0 {
                let prev = &self.chain[i - 1];
                let in_part = child_index_set(prev.n, prev.j).is_some_and(|a| a.contains(link.j));
                if !in_part || !prev.interval.contains(&link.interval) || link.j <= prev.j {
                    return false;
                }
            }
            let Some(cert) = self.certificates.get(i) else { return false };
            let stored: Vec<u64> = cover.entries_between(0, link.j).map(|(d, _)| d).collect();
            if cert.j != link.j || cert.disjoint_from != stored {
                return false;
            }
            if cert.disjoint_from.iter().any(|d| cover.get(*d).is_none_or(|jd| jd.intersects(&link.interval))) {
                return false;
            }
        }
        self.certificates.len() == self.chain.len()
    }
}

/// Nested `I^0_(j_0) ⊃ I^1_(j_1) ⊃ ...` with each `I^n_(j_n)` missing every `J_d`, `d < j_n`.
///
/// Level 0 searches the family of `[0, 1]`; level `n+1` searches the family
/// inside `I^n_(j_n)` against the cover restricted to indices `>= j_n`.
pub fn extract_uncovered_point(x: &MicroXApprox, cover: &CoverAttempt, target_depth: u32) -> Result<ChainOutcome> {
    if target_depth > x.depth() {
        return Err(Error::Precondition(format!("target depth {target_depth} exceeds materialized depth {}", x.depth())));
    }
    let mut chain = WitnessChain { chain: Vec::new(), certificates: Vec::new() };
    let mut parent = 0u64;
    for n in 0..=target_depth {
        let fail = |reason: String, hypothesis| ChainFailure { level: n, reason, hypothesis };
        let Some(family) = x.family(n, parent) else {
            let f = fail(format!("no materialized family below index {parent} at cutoff {}", x.index_cutoff()), None);
            return Ok(ChainOutcome { target_depth, chain, failure: Some(f) });
        };
        let restricted = if n == 0 { cover.clone() } else { cover.restrict_from(parent) };
        let report = match corollary_witness(family, &restricted) {
            Ok(r) => r,
            Err(Error::WindowInsufficient(msg)) => {
                let f = fail(msg, None);
                return Ok(ChainOutcome { target_depth, chain, failure: Some(f) });
            }
            Err(e) => return Err(e),
        };
        let j = report.certificate.witness;
        let interval = family.interval(j).expect("witness is placed").clone();
        let disjoint_from: Vec<u64> = cover.entries_between(0, j).map(|(d, _)| d).collect();
        debug_assert!(disjoint_from.iter().all(|d| !cover.get(*d).unwrap().intersects(&interval)));
        chain.chain.push(ChainLink { n, j, interval });
        chain.certificates.push(LevelCertificate { n, j, disjoint_from, hypothesis: report.hypothesis });
        parent = j;
    }
    Ok(ChainOutcome { target_depth, chain, failure: None })
}
