//! Certified enclosures of natural logarithms of positive rationals.
//!
//! Values are fixed point: an enclosure `[lo, hi]` at `bits` means
//! `lo / 2^bits <= ln x <= hi / 2^bits`. Every rounding step is directed
//! outward, so the enclosure is always sound and shrinks as `bits` grows.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LnEnclosure {
    pub lo: BigInt,
    pub hi: BigInt,
    pub bits: u32,
}

impl LnEnclosure {
    /// Interval product; the result carries `self.bits + other.bits` fraction bits.
    pub fn mul(&self, other: &LnEnclosure) -> LnEnclosure {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        LnEnclosure { lo, hi, bits: self.bits + other.bits }
    }

    /// Re-express at more fraction bits (exact).
    pub fn widen_to(&self, bits: u32) -> LnEnclosure {
        assert!(bits >= self.bits);
        let k = bits - self.bits;
        LnEnclosure { lo: &self.lo << k, hi: &self.hi << k, bits }
    }

    pub fn width(&self) -> BigInt {
        &self.hi - &self.lo
    }
}

fn pow2(k: u32) -> BigInt {
    BigInt::one() << k
}

fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

/// Enclosure of `atanh(num/den)` for `0 <= num/den < 1/3 + tiny`, at `w` bits.
fn atanh_small(num: &BigInt, den: &BigInt, w: u32) -> (BigInt, BigInt) {
    debug_assert!(!num.is_negative() && den.is_positive());
    let one = pow2(w);
    let z_lo = floor_div(&(num << w), den);
    let z_hi = ceil_div(&(num << w), den);
    if z_hi.is_zero() {
        return (BigInt::zero(), BigInt::zero());
    }
    let z2_lo = floor_div(&(&z_lo * &z_lo), &one);
    let z2_hi = ceil_div(&(&z_hi * &z_hi), &one);
    let mut pow_lo = z_lo;
    let mut pow_hi = z_hi;
    let mut sum_lo = BigInt::zero();
    let mut sum_hi = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        let odd = BigInt::from(2 * k + 1);
        sum_lo += floor_div(&pow_lo, &odd);
        sum_hi += ceil_div(&pow_hi, &odd);
        pow_lo = floor_div(&(&pow_lo * &z2_lo), &one);
        pow_hi = ceil_div(&(&pow_hi * &z2_hi), &one);
        k += 1;
        if pow_hi <= BigInt::one() {
            // remaining tail is at most pow/(1 - z^2) < 2·pow
            sum_hi += &pow_hi * 2;
            break;
        }
    }
    (sum_lo, sum_hi)
}

/// Certified enclosure of `ln x` for rational `x > 0` with roughly `bits` accurate bits.
pub fn ln_enclosure(x: &Rational, bits: u32) -> LnEnclosure {
    assert!(x.is_positive(), "logarithm of a non-positive number");
    let guard = 16;
    let w = bits + guard;
    let n = x.numer().clone();
    let d = x.denom().clone();
    // choose e with 1 <= x / 2^e < 2
    let mut e: i64 = n.bits() as i64 - d.bits() as i64;
    let scaled = |e: i64| -> (BigInt, BigInt) {
        if e >= 0 {
            (n.clone(), &d << (e as u64))
        } else {
            (&n << ((-e) as u64), d.clone())
        }
    };
    let (mut yn, mut yd) = scaled(e);
    if yn < yd {
        e -= 1;
        (yn, yd) = scaled(e);
    } else if yn >= &yd * 2 {
        e += 1;
        (yn, yd) = scaled(e);
    }
    debug_assert!(yn >= yd && yn < &yd * 2);

    // ln y = 2 atanh((y-1)/(y+1))
    let (a_lo, a_hi) = atanh_small(&(&yn - &yd), &(&yn + &yd), w);
    let (mut lo, mut hi) = (a_lo * 2, a_hi * 2);
    if e != 0 {
        // ln 2 = 2 atanh(1/3)
        let (l2_lo, l2_hi) = atanh_small(&BigInt::one(), &BigInt::from(3), w);
        let (l2_lo, l2_hi) = (l2_lo * 2, l2_hi * 2);
        let eb = BigInt::from(e);
        if e > 0 {
            lo += &eb * l2_lo;
            hi += &eb * l2_hi;
        } else {
            lo += &eb * l2_hi;
            hi += &eb * l2_lo;
        }
    }
    LnEnclosure { lo, hi, bits: w }
}

/// Decide `len <= eps^ln(index)` at the given working precision.
///
/// Returns `None` when the enclosures overlap and the comparison cannot be
/// decided at this precision.
pub fn decide_log_power_bound(len: &Rational, eps: &Rational, index: u64, bits: u32) -> Option<bool> {
    assert!(!len.is_negative(), "negative length");
    assert!(eps.is_positive(), "non-positive base");
    assert!(index >= 1);
    if len.is_zero() {
        return Some(true);
    }
    // len <= eps^ln(index)  <=>  ln(len) <= ln(index)·ln(eps)
    let lhs = ln_enclosure(len, bits);
    let rhs = ln_enclosure(&Rational::from(index), bits).mul(&ln_enclosure(eps, bits));
    let lhs = lhs.widen_to(rhs.bits);
    if lhs.hi <= rhs.lo {
        Some(true)
    } else if lhs.lo > rhs.hi {
        Some(false)
    } else {
        None
    }
}

/// Smallest integer `c` certified to satisfy `c >= ln(n)`.
pub fn ln_ceiling(n: u64) -> u64 {
    assert!(n >= 1);
    let enc = ln_enclosure(&Rational::from(n), 64);
    let c = ceil_div(&enc.hi, &pow2(enc.bits));
    u64::try_from(c.max(BigInt::zero())).expect("small logarithm")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: ln x = -Σ (1-x)^k/k for x in (0,1], summed in exact rationals.
    fn slow_ln_lower_upper(x: &Rational, terms: u64) -> (Rational, Rational) {
        let t = &Rational::one() - x;
        let mut pow = Rational::one();
        let mut sum = Rational::zero();
        for k in 1..=terms {
            pow = &pow * &t;
            sum = &sum + &(&pow * &Rational::frac(1, k as i64));
        }
        // tail bound for the remaining terms: t^(terms+1)/((terms+1)(1-t))
        let tail = &(&pow * &t) * &(&Rational::frac(1, terms as i64 + 1) * &x.recip());
        (-(&sum + &tail), -sum)
    }

    fn contains(enc: &LnEnclosure, lo: &Rational, hi: &Rational) -> bool {
        let scale = Rational::from_int(pow2(enc.bits));
        let elo = &Rational::from_int(enc.lo.clone()) * &scale.recip();
        let ehi = &Rational::from_int(enc.hi.clone()) * &scale.recip();
        &elo <= hi && lo <= &ehi
    }

    #[test]
    fn encloses_series_oracle() {
        for (n, d) in [(1, 2), (3, 4), (9, 10), (2, 3), (1, 1)] {
            let x = Rational::frac(n, d);
            let (lo, hi) = slow_ln_lower_upper(&x, 60);
            let enc = ln_enclosure(&x, 64);
            assert!(contains(&enc, &lo, &hi), "ln({x}) enclosure misses oracle");
            assert!(enc.width() < BigInt::from(1u64 << 20));
        }
    }

    #[test]
    fn ln_of_one_is_exact_zero() {
        let enc = ln_enclosure(&Rational::one(), 64);
        assert!(enc.lo.is_zero() && enc.hi.is_zero());
    }

    #[test]
    fn sign_and_magnitude_of_ln7() {
        // ln 7 ≈ 1.9459
        let enc = ln_enclosure(&Rational::from(7i64), 64);
        let s = pow2(enc.bits);
        assert!(enc.lo > &s * 194 / 100 && enc.hi < &s * 195 / 100);
        let inv = ln_enclosure(&Rational::frac(1, 7), 64);
        assert!(inv.lo <= -enc.lo.clone() && -enc.hi.clone() <= inv.hi);
    }

    #[test]
    fn log_power_bound_example() {
        // (1/7)^ln 7 ≈ 0.02265 > 1/50
        let eps = Rational::frac(1, 7);
        assert_eq!(decide_log_power_bound(&Rational::frac(1, 50), &eps, 7, 64), Some(true));
        assert_eq!(decide_log_power_bound(&Rational::frac(1, 44), &eps, 7, 64), Some(false));
    }

    #[test]
    fn ceilings() {
        assert_eq!(ln_ceiling(1), 0);
        assert_eq!(ln_ceiling(2), 1);
        assert_eq!(ln_ceiling(7), 2);
        assert_eq!(ln_ceiling(21), 4);
    }
}
