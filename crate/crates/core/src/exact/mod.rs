//! Exact rationals, closed intervals, base-7 digit streams and certified logarithms.

mod digits;
mod interval;
pub mod log;
mod rational;

pub use digits::{digits_base7, Digit7Stream};
pub use interval::Interval;
pub use rational::Rational;
