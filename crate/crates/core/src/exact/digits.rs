use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::Rational;
use crate::error::Error;

/// Finite base-7 digit prefix of a number in `[0, 7^-m)`.
///
/// The represented prefix value is `Σ digits[j] / 7^(m+1+j)`. `exact` records
/// whether the expansion of the source value terminated inside the prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digit7Stream {
    pub m: u64,
    pub digits: Vec<u8>,
    pub exact: bool,
}

impl Digit7Stream {
    pub fn new(m: u64, digits: Vec<u8>, exact: bool) -> Result<Self, Error> {
        if digits.is_empty() {
            return Err(Error::Precondition("digit stream must be nonempty".into()));
        }
        if let Some(d) = digits.iter().find(|&&d| d > 6) {
            return Err(Error::Precondition(format!("base-7 digit out of range: {d}")));
        }
        Ok(Digit7Stream { m, digits, exact })
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digit(&self, j: usize) -> Option<u8> {
        self.digits.get(j).copied()
    }

    /// The rational value of the stored prefix.
    pub fn prefix_value(&self) -> Rational {
        let mut acc = BigInt::zero();
        for &d in &self.digits {
            acc = acc * 7 + d;
        }
        let scale = self.m + self.digits.len() as u64;
        Rational::from_int(acc) * Rational::inv_pow7(scale)
    }

    /// Whether `r` is consistent with this prefix, i.e. `r - prefix ∈ [0, 7^-(m+len)]`
    /// (or exactly zero when the stream is marked exact).
    pub fn describes(&self, r: &Rational) -> bool {
        let rest = r - &self.prefix_value();
        if self.exact {
            return rest.is_zero();
        }
        !rest.is_negative() && rest < Rational::inv_pow7(self.m + self.digits.len() as u64)
    }
}

/// First `count` base-7 digits of `r·7^m` after the point, for `0 < r < 7^-m`.
pub fn digits_base7(r: &Rational, m: u64, count: usize) -> Result<Digit7Stream, Error> {
    if count == 0 {
        return Err(Error::Precondition("digit count must be positive".into()));
    }
    let bound = Rational::inv_pow7(m);
    if !r.is_positive() || r >= &bound {
        return Err(Error::Precondition(format!("{r} is not in (0, 7^-{m})")));
    }
    // x = r·7^m ∈ (0,1), tracked as num/den
    let x = r * &Rational::from_int(num_traits::pow(BigInt::from(7), m as usize));
    let den = x.denom().clone();
    let mut num = x.numer().clone();
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        num *= 7;
        let d = &num / &den;
        num -= &d * &den;
        digits.push(d.to_u8().expect("base-7 digit"));
    }
    Digit7Stream::new(m, digits, num.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: repeated multiply-and-floor on exact rationals.
    fn oracle(r: &Rational, m: u64, count: usize) -> Vec<u8> {
        let mut x = r * &Rational::from_int(7i64.pow(m as u32));
        let seven = Rational::from(7i64);
        (0..count)
            .map(|_| {
                x = &x * &seven;
                let d = x.floor();
                x = &x - &Rational::from_int(d.clone());
                d.to_u8().unwrap()
            })
            .collect()
    }

    #[test]
    fn one_half() {
        let s = digits_base7(&Rational::frac(1, 2), 0, 4).unwrap();
        assert_eq!(s.digits, vec![3, 3, 3, 3]);
        assert!(!s.exact);
        assert_eq!(s.digits, oracle(&Rational::frac(1, 2), 0, 4));
    }

    #[test]
    fn terminating_examples() {
        let s = digits_base7(&Rational::frac(1, 7), 0, 3).unwrap();
        assert_eq!((s.digits.clone(), s.exact), (vec![1, 0, 0], true));
        let s = digits_base7(&Rational::frac(8, 49), 0, 3).unwrap();
        assert_eq!((s.digits.clone(), s.exact), (vec![1, 1, 0], true));
        assert_eq!(s.prefix_value(), Rational::frac(8, 49));
    }

    #[test]
    fn base_exponent_shifts_scale() {
        // 1/98 = (1/2)/49, so with m = 2 the digits are those of 1/2
        let s = digits_base7(&Rational::frac(1, 98), 2, 5).unwrap();
        assert_eq!(s.digits, vec![3; 5]);
        assert!(s.describes(&Rational::frac(1, 98)));
    }

    #[test]
    fn out_of_range() {
        assert!(digits_base7(&Rational::zero(), 0, 3).is_err());
        assert!(digits_base7(&Rational::one(), 0, 3).is_err());
        assert!(digits_base7(&Rational::frac(1, 7), 1, 3).is_err());
        assert!(digits_base7(&Rational::frac(1, 2), 0, 0).is_err());
    }
}
