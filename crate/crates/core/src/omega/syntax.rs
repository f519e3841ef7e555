//! Compact notation for ω-sets.
//!
//! Terms are joined by `|` (union):
//! - `w` is ω, `(w+1)` is ω+1 = {1, 2, ...}
//! - `k*(w+1)` or `k(w+1)` is {k, 2k, ...}
//! - `a+qw`, `a+q*w`, `a+w`, `qw`, `q*w` are progressions
//! - `{1,5,9}` is a finite set

use super::{OmegaSet, Progression};
use crate::error::{Error, Result};

pub fn parse_omega_set(text: &str) -> Result<OmegaSet> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty set expression".into()));
    }
    let mut finite = Vec::new();
    let mut progressions = Vec::new();
    for term in compact.split('|') {
        parse_term(term, &mut finite, &mut progressions)?;
    }
    OmegaSet::new(finite, progressions, [])
}

fn number(s: &str, whole: &str) -> Result<u64> {
    s.parse().map_err(|_| Error::Parse(format!("bad number `{s}` in `{whole}`")))
}

fn parse_term(term: &str, finite: &mut Vec<u64>, progressions: &mut Vec<Progression>) -> Result<()> {
    let bad = || Error::Parse(format!("unrecognized set term `{term}`"));
    if term.is_empty() {
        return Err(bad());
    }
    if let Some(body) = term.strip_prefix('{').and_then(|t| t.strip_suffix('}')) {
        for item in body.split(',').filter(|s| !s.is_empty()) {
            finite.push(number(item, term)?);
        }
        return Ok(());
    }
    if let Some(head) = term.strip_suffix("(w+1)") {
        let k = match head.strip_suffix('*').unwrap_or(head) {
            "" => 1,
            k => number(k, term)?,
        };
        progressions.push(Progression::new(k, k)?);
        return Ok(());
    }
    let Some(head) = term.strip_suffix('w') else {
        return Err(bad());
    };
    let (start, coeff) = match head.split_once('+') {
        Some((a, q)) => (number(a, term)?, q),
        None => (0, head),
    };
    let step = match coeff.strip_suffix('*').unwrap_or(coeff) {
        "" => 1,
        q => number(q, term)?,
    };
    progressions.push(Progression::new(start, step)?);
    Ok(())
}
