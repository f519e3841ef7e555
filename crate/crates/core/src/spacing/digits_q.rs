use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Digit7Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QStatus {
    Complete,
    PrefixExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QSequence {
    pub indices: Vec<u64>,
    pub status: QStatus,
}

impl QSequence {
    pub fn get(&self, j: usize) -> Result<u64> {
        self.indices
            .get(j)
            .copied()
            .ok_or(Error::PrefixExhausted { needed: j + 1, available: self.indices.len() })
    }
}

/// First `how_many` entries of the digit-parity sequence `q`.
///
/// `q(0)` is the first nonzero digit. After an odd digit the next entry is the
/// first later digit that is not 6, after an even digit the first later
/// digit that is not 0. Digits past the prefix are zero for exact streams and
/// unknown otherwise; running into unknown digits ends the sequence early.
pub fn q_sequence(r: &Digit7Stream, how_many: usize) -> Result<QSequence> {
    if r.digits.is_empty() {
        return Err(Error::Precondition("empty digit stream".into()));
    }
    let len = r.digits.len();
    let mut indices = Vec::with_capacity(how_many.min(len + 1));
    let mut next = (0..len).find(|&j| r.digits[j] != 0);
    while let Some(q) = next {
        if indices.len() == how_many {
            break;
        }
        indices.push(q as u64);
        let digit = r.digit(q).unwrap_or(0);
        next = if digit % 2 == 1 {
            match (q + 1..len).find(|&j| r.digits[j] != 6) {
                Some(j) => Some(j),
                None if r.exact => Some((q + 1).max(len)),
                None => None,
            }
        } else {
            (q + 1..len).find(|&j| r.digits[j] != 0)
        };
    }
    let status = if indices.len() == how_many { QStatus::Complete } else { QStatus::PrefixExhausted };
    Ok(QSequence { indices, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{digits_base7, Rational};

    fn stream(d: &[u8], exact: bool) -> Digit7Stream {
        Digit7Stream::new(0, d.to_vec(), exact).unwrap()
    }

    #[test]
    fn all_threes() {
        let r = digits_base7(&Rational::frac(1, 2), 0, 10).unwrap();
        let q = q_sequence(&r, 6).unwrap();
        assert_eq!(q.indices, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(q.status, QStatus::Complete);
    }

    #[test]
    fn leading_zeros_and_even_digit() {
        let q = q_sequence(&stream(&[0, 0, 2, 0, 5, 1], false), 2).unwrap();
        assert_eq!(q.indices, vec![2, 4]);
    }

    #[test]
    fn stalls_on_sixes() {
        let q = q_sequence(&stream(&[1, 6, 6, 6], false), 3).unwrap();
        assert_eq!(q.indices, vec![0]);
        assert_eq!(q.status, QStatus::PrefixExhausted);
        assert!(q.get(1).is_err());
        let q = q_sequence(&stream(&[1, 6, 6, 4], false), 3).unwrap();
        assert_eq!(q.indices, vec![0, 3]);
    }

    #[test]
    fn exact_tail_is_zero() {
        // 1/7: digit 1 then zeros, which are not 6, then no nonzero digit ever
        let q = q_sequence(&stream(&[1, 0, 0], true), 5).unwrap();
        assert_eq!(q.indices, vec![0, 1]);
        assert_eq!(q.status, QStatus::PrefixExhausted);
        let q = q_sequence(&stream(&[3], true), 5).unwrap();
        assert_eq!(q.indices, vec![0, 1]);
    }

    #[test]
    fn empty_stream_rejected() {
        let bad = Digit7Stream { m: 0, digits: vec![], exact: false };
        assert!(q_sequence(&bad, 1).is_err());
    }

    /// Direct transcription of the defining rules over a known digit function.
    fn oracle(digits: &[u8], how_many: usize) -> Vec<u64> {
        let mut out = Vec::new();
        let mut j = 0;
        while j < digits.len() && digits[j] == 0 {
            j += 1;
        }
        if j == digits.len() {
            return out;
        }
        out.push(j as u64);
        while out.len() < how_many {
            let last = *out.last().unwrap() as usize;
            let avoid = if digits[last] % 2 == 1 { 6 } else { 0 };
            match (last + 1..digits.len()).find(|&i| digits[i] != avoid) {
                Some(i) => out.push(i as u64),
                None => break,
            }
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn matches_oracle(digits in proptest::collection::vec(0u8..7, 1..40), n in 1usize..30) {
            let q = q_sequence(&stream(&digits, false), n).unwrap();
            proptest::prop_assert_eq!(q.indices, oracle(&digits, n));
        }
    }
}
