use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Constraint, CoverAttempt};
use crate::exact::log::decide_log_power_bound;

pub const DEFAULT_PRECISION_CAP: u32 = 256;
const START_PRECISION: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexStatus {
    Ok,
    Violation,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexValidation {
    pub d: u64,
    pub status: IndexStatus,
    /// bits used for the decision; 0 for exact rational comparisons
    pub precision_bits: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<IndexValidation>,
    pub precision_bits: u32,
    pub window_end: u64,
    /// members of `D` up to the window end with no stored interval (treated as empty)
    pub absent_in_window: u64,
}

impl ValidationReport {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.status == IndexStatus::Ok)
    }

    pub fn violations(&self) -> Vec<u64> {
        self.by_status(IndexStatus::Violation)
    }

    pub fn indeterminate(&self) -> Vec<u64> {
        self.by_status(IndexStatus::Indeterminate)
    }

    fn by_status(&self, s: IndexStatus) -> Vec<u64> {
        self.entries.iter().filter(|e| e.status == s).map(|e| e.d).collect()
    }
}

/// Check every stored `J_d` against the cover's length constraint.
///
/// Geometric bounds are exact. Logarithmic bounds use certified logarithm
/// enclosures, doubling the precision up to `precision_cap` bits before
/// giving up with an indeterminate status.
pub fn validate(cover: &CoverAttempt, precision_cap: u32) -> ValidationReport {
    let entries: Vec<IndexValidation> = cover
        .intervals()
        .par_iter()
        .map(|(&d, j)| {
            let mk = |status, bits, note: Option<&str>| IndexValidation {
                d,
                status,
                precision_bits: bits,
                note: note.map(str::to_string),
            };
            if d > cover.window_end() {
                return mk(IndexStatus::Violation, 0, Some("index beyond window end"));
            }
            if !cover.index_set().contains(d) {
                return mk(IndexStatus::Violation, 0, Some("index not in D"));
            }
            let len = j.length();
            match cover.constraint() {
                Constraint::Geometric { eps } => {
                    if len <= eps.pow(d + 1) {
                        mk(IndexStatus::Ok, 0, None)
                    } else {
                        mk(IndexStatus::Violation, 0, Some("length exceeds eps^(d+1)"))
                    }
                }
                Constraint::Logarithmic { eps } => {
                    let mut bits = START_PRECISION.min(precision_cap);
                    loop {
                        match decide_log_power_bound(&len, eps, d + 2, bits) {
                            Some(true) => return mk(IndexStatus::Ok, bits, None),
                            Some(false) => {
                                return mk(IndexStatus::Violation, bits, Some("length exceeds eps^ln(d+2)"))
                            }
                            None if bits >= precision_cap => {
                                return mk(IndexStatus::Indeterminate, bits, Some("precision cap reached"))
                            }
                            None => bits = (bits * 2).min(precision_cap),
                        }
                    }
                }
            }
        })
        .collect();
    let precision_bits = entries.iter().map(|e| e.precision_bits).max().unwrap_or(0);
    let absent_in_window = cover
        .index_set()
        .iter()
        .take_while(|&n| n <= cover.window_end())
        .filter(|n| cover.get(*n).is_none())
        .count() as u64;
    ValidationReport { entries, precision_bits, window_end: cover.window_end(), absent_in_window }
}
