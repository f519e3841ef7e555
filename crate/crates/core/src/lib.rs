//! Exact interval constructions around microscopic sets.
//!
//! The crate builds the four-children spacing hierarchy with its placed
//! intervals, the nested set `X` whose covers of lower density zero always
//! miss a point, the shifted-copy selection machinery, and the re-indexing
//! transforms between cover families. Every geometric predicate is decided
//! in exact rational arithmetic, and every positive claim comes with a
//! certificate that can be replayed independently.

pub mod cli;
pub mod constructions;
pub mod covers;
pub mod error;
pub mod exact;
pub mod omega;
pub mod spacing;

pub use error::{Error, Result};
