//! The nested set `X`, its uncovered-point chains, the shifted-copy
//! experiment, and re-indexing transforms between cover families.

mod chain;
mod micro_x;
mod reindex;
mod shifts;

pub use chain::{extract_uncovered_point, ChainFailure, ChainLink, ChainOutcome, LevelCertificate, WitnessChain};
pub use micro_x::{build_x, child_index_set, verify_microscopic, MicroXApprox, MicroscopicCheck, TruncationEntry};
pub use shifts::{
    clustered_shifts, premise_cover, shift_family, shift_family_experiment, PairCheck, PhiEntry, SetTelemetry, ShiftExperiment,
    ShiftSets, NONDEGENERATE_Q_LEN,
};
pub use reindex::{
    ln_union_chain, reindex_density_avoid, reindex_ln_avoid, thin_reindex, union_reindex_mprime, DensityReindex, LnReindex,
    UnionReindex,
};
