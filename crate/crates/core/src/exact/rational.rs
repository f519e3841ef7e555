use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Exact rational number kept in lowest terms with a positive denominator.
///
/// The denominator is also kept as `7^sevens · cofactor` whenever the
/// cofactor fits a word. Almost every value here has that shape, and it lets
/// sums, products and comparisons avoid full-width gcds and cross products.
#[derive(Clone)]
pub struct Rational {
    q: BigRational,
    sevens: u64,
    cofactor: Option<u64>,
}

thread_local! {
    // SEVEN_POWERS[k] = 7^(2^k)
    static SEVEN_POWERS: RefCell<Vec<BigUint>> = RefCell::new(vec![BigUint::from(7u32)]);
}

fn with_seven_power<T>(k: usize, f: impl FnOnce(&BigUint) -> T) -> T {
    SEVEN_POWERS.with(|p| {
        let mut p = p.borrow_mut();
        while p.len() <= k {
            let last = p.last().expect("seeded");
            let next = last * last;
            p.push(next);
        }
        f(&p[k])
    })
}

/// `7^e` from the cached squares.
fn pow7(e: u64) -> BigUint {
    let mut acc = BigUint::one();
    for k in 0..64 - e.leading_zeros() as usize {
        if e >> k & 1 == 1 {
            acc = with_seven_power(k, |p| &acc * p);
        }
    }
    acc
}

/// Strips at most `limit` factors of 7 from `x`.
fn strip_sevens(x: BigUint, limit: u64) -> (u64, BigUint) {
    let mut x = x;
    if limit == 0 || x.is_zero() || !(&x % 7u32).is_zero() {
        return (0, x);
    }
    // 7^(2^(top+1)) > x, so the valuation is below 2^(top+1)
    let top = (x.bits() / 2).max(1).ilog2() as usize;
    let mut v = 0u64;
    for k in (0..=top).rev() {
        let step = 1u64 << k;
        if v + step > limit {
            continue;
        }
        let (q, r) = with_seven_power(k, |p| x.div_rem(p));
        if r.is_zero() {
            x = q;
            v += step;
        }
    }
    (v, x)
}

fn sign_of(negative: bool) -> Sign {
    if negative {
        Sign::Minus
    } else {
        Sign::Plus
    }
}

impl Rational {
    /// Lowest terms for `num/den` when `den = 7^sevens · cofactor` is already known
    /// and `num` has at most `strip` factors of 7 in common with it.
    fn from_shape(sign: Sign, num: BigUint, den: BigUint, sevens: u64, cofactor: Option<u64>, strip: u64) -> Self {
        if num.is_zero() {
            return Rational::zero();
        }
        let (nv, mut num) = strip_sevens(num, strip.min(sevens));
        let mut den = if nv > 0 { den / pow7(nv) } else { den };
        let sevens = sevens - nv;
        let cofactor = match cofactor {
            Some(c) => {
                let g = (&num % c).to_u64().expect("below a word").gcd(&c);
                if g > 1 {
                    num /= g;
                    den /= g;
                }
                Some(c / g)
            }
            None => {
                let g = num.gcd(&den);
                if !g.is_one() {
                    num /= &g;
                    den /= &g;
                }
                None
            }
        };
        Rational {
            q: BigRational::new_raw(BigInt::from_biguint(sign, num), BigInt::from_biguint(Sign::Plus, den)),
            sevens,
            cofactor,
        }
    }

    /// Lowest terms for `num/den`, `den != 0`, with nothing known about `den`.
    fn reduced(num: BigInt, den: BigInt) -> Self {
        let (dsign, den) = den.into_parts();
        let (nsign, num) = num.into_parts();
        let sign = sign_of((nsign == Sign::Minus) != (dsign == Sign::Minus));
        let (sevens, rest) = strip_sevens(den.clone(), u64::MAX);
        Self::from_shape(sign, num, den, sevens, rest.to_u64(), sevens)
    }

    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self, Error> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Self::reduced(num.into(), den))
    }

    /// Panicking constructor for literals known to be well formed.
    pub fn frac(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::reduced(num.into(), den.into())
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational { q: BigRational::from_integer(n.into()), sevens: 0, cofactor: Some(1) }
    }

    pub fn from_big(r: BigRational) -> Self {
        let (n, d) = r.into();
        Self::reduced(n, d)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    /// `7^(-k)`.
    pub fn inv_pow7(k: u64) -> Self {
        Rational { q: BigRational::new_raw(BigInt::one(), BigInt::from(pow7(k))), sevens: k, cofactor: Some(1) }
    }

    /// `base^(-k)` for a positive integer base.
    pub fn inv_pow(base: u64, k: u64) -> Self {
        assert!(base > 0, "zero base");
        if base == 7 {
            return Self::inv_pow7(k);
        }
        Self::reduced(BigInt::one(), num_traits::pow(BigInt::from(base), k as usize))
    }

    /// Integer power with a non-negative exponent.
    pub fn pow(&self, k: u64) -> Self {
        let cofactor = self.cofactor.and_then(|c| u32::try_from(k).ok().and_then(|k| c.checked_pow(k)));
        let q = BigRational::new_raw(num_traits::pow(self.numer().clone(), k as usize), num_traits::pow(self.denom().clone(), k as usize));
        match (self.sevens.checked_mul(k), cofactor) {
            (Some(sevens), Some(c)) => Rational { q, sevens, cofactor: Some(c) },
            _ => {
                let (n, d) = q.into();
                Self::reduced(n, d)
            }
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.q.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.q.denom()
    }

    pub fn as_big(&self) -> &BigRational {
        &self.q
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.q.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.q.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational { q: self.q.abs(), ..self.clone() }
    }

    pub fn floor(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "division by zero");
        Self::reduced(self.denom().clone(), self.numer().clone())
    }

    pub fn to_u64(&self) -> Option<u64> {
        if self.q.is_integer() {
            self.numer().to_u64()
        } else {
            None
        }
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.q.hash(state)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.denom() == other.denom() {
            return self.numer().cmp(other.numer());
        }
        let (sa, sb) = (self.numer().sign(), other.numer().sign());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if let (Some(ca), Some(cb)) = (self.cofactor, other.cofactor) {
            // a/(7^va·ca) vs b/(7^vb·cb), scaled by 7^min(va, vb)·ca·cb
            let (va, vb) = (self.sevens, other.sevens);
            let lhs = self.numer() * BigInt::from(cb);
            let rhs = other.numer() * BigInt::from(ca);
            return match va.cmp(&vb) {
                Ordering::Equal => lhs.cmp(&rhs),
                Ordering::Greater => lhs.cmp(&(rhs * BigInt::from(pow7(va - vb)))),
                Ordering::Less => (lhs * BigInt::from(pow7(vb - va))).cmp(&rhs),
            };
        }
        (self.numer() * other.denom()).cmp(&(other.numer() * self.denom()))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `p`, `-p` or `p/q` with decimal integers.
    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        let bad = || Error::Parse(format!("invalid rational `{s}`"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => {
                let n: BigInt = s.parse().map_err(|_| bad())?;
                Ok(Rational::from_int(n))
            }
        }
    }
}

fn add_raw(a: &Rational, b: &Rational) -> Rational {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if let (Some(ca), Some(cb)) = (a.cofactor, b.cofactor) {
        if let Some(l) = (ca / ca.gcd(&cb)).checked_mul(cb) {
            // common denominator 7^max(va, vb)·lcm(ca, cb)
            let top = a.sevens.max(b.sevens);
            let scale = |r: &Rational, c: u64| BigInt::from(pow7(top - r.sevens) * (l / c));
            let fa = scale(a, ca);
            let num = a.numer() * &fa + b.numer() * scale(b, cb);
            let den = (a.denom() * fa).into_parts().1;
            let (sign, num) = num.into_parts();
            // with va != vb exactly one term is prime to 7
            let strip = if a.sevens == b.sevens { top } else { 0 };
            return Rational::from_shape(sign, num, den, top, Some(l), strip);
        }
    }
    Rational::reduced(a.numer() * b.denom() + b.numer() * a.denom(), a.denom() * b.denom())
}

fn mul_raw(a: &Rational, b: &Rational) -> Rational {
    let num = a.numer() * b.numer();
    let den = (a.denom() * b.denom()).into_parts().1;
    let (sign, num) = num.into_parts();
    match (a.cofactor.zip(b.cofactor).and_then(|(x, y)| x.checked_mul(y)), a.sevens.checked_add(b.sevens)) {
        (Some(c), Some(v)) => Rational::from_shape(sign, num, den, v, Some(c), v),
        _ => Rational::reduced(BigInt::from_biguint(sign, num), BigInt::from(den)),
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(self, rhs)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $body(&self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, add_raw);
forward_binop!(Sub, sub, |a: &Rational, b: &Rational| add_raw(a, &-b));
forward_binop!(Mul, mul, mul_raw);

impl std::ops::Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero");
        mul_raw(self, &rhs.recip())
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational { q: -self.q, ..self }
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational { q: -&self.q, sevens: self.sevens, cofactor: self.cofactor }
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::from_int(n)
    }
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: String,
    den: String,
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr { num: self.numer().to_string(), den: self.denom().to_string() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = RationalRepr::deserialize(d)?;
        let num: BigInt = repr.num.parse().map_err(D::Error::custom)?;
        let den: BigInt = repr.den.parse().map_err(D::Error::custom)?;
        Rational::new(num, den).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lowest_terms_and_sign() {
        let r = Rational::new(6, -4).unwrap();
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
        assert!(Rational::new(1, 0).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("1/7".parse::<Rational>().unwrap(), Rational::frac(1, 7));
        assert_eq!("-3".parse::<Rational>().unwrap(), Rational::from(-3i64));
        assert_eq!(Rational::frac(2, 14).to_string(), "1/7");
        assert!("x/2".parse::<Rational>().is_err());
    }

    #[test]
    fn json_shape() {
        let json = serde_json::to_string(&Rational::frac(-5, 49)).unwrap();
        assert_eq!(json, r#"{"num":"-5","den":"49"}"#);
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Rational::frac(-5, 49));
        assert!(serde_json::from_str::<Rational>(r#"{"num":"1","den":"0"}"#).is_err());
    }

    #[test]
    fn powers_of_seven() {
        assert_eq!(Rational::inv_pow7(3), Rational::frac(1, 343));
        assert_eq!(Rational::frac(1, 7).pow(3), Rational::inv_pow7(3));
        assert_eq!(Rational::inv_pow7(0), Rational::one());
    }

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    proptest::proptest! {
        #[test]
        fn arithmetic_matches_ratio(
            a in -5000i64..5000, b in 1i64..5000, c in -5000i64..5000, d in 1i64..5000,
            e in 0u64..60, f in 0u64..60, g in 0u32..20,
        ) {
            let x = &Rational::frac(a, b) * &Rational::inv_pow7(e);
            let y = &Rational::frac(c, d) * &Rational::inv_pow7(f);
            let bx = big(a, b) * BigRational::new(1.into(), num_traits::pow(BigInt::from(7), e as usize));
            let by = big(c, d) * BigRational::new(1.into(), num_traits::pow(BigInt::from(7), f as usize));
            proptest::prop_assert_eq!(x.as_big(), &bx);
            proptest::prop_assert_eq!((&x + &y).as_big().clone(), &bx + &by);
            proptest::prop_assert_eq!((&x - &y).as_big().clone(), &bx - &by);
            proptest::prop_assert_eq!((&x * &y).as_big().clone(), &bx * &by);
            if !y.is_zero() {
                proptest::prop_assert_eq!((&x / &y).as_big().clone(), &bx / &by);
            }
            proptest::prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            proptest::prop_assert_eq!(x.pow(3).as_big().clone(), num_traits::pow(bx.clone(), 3));
            // numerators sharing powers of 7 with the other denominator
            let w = &x * &Rational::from(7u64.pow(g));
            let bw = &bx * BigRational::from_integer(BigInt::from(7u64.pow(g)));
            proptest::prop_assert_eq!(w.as_big().clone(), bw.clone());
            proptest::prop_assert_eq!((&w + &y).as_big().clone(), &bw + &by);
            proptest::prop_assert_eq!((&w - &x).as_big().clone(), &bw - &bx);
            proptest::prop_assert_eq!(w.cmp(&y), bw.cmp(&by));
        }
    }

    #[test]
    fn large_cofactor_falls_back() {
        let q = num_traits::pow(BigInt::from(7), 30) - 1;
        let x = Rational::new(&q * BigInt::from(3), &q * BigInt::from(11)).unwrap();
        assert_eq!(x, Rational::frac(3, 11));
    }
}
