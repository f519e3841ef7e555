//! The spacing hierarchy `K^i_j`, placement of the intervals `I_a`, and the
//! selection sets `Y` and `Z` with per-step diagnostics.

mod diagnostics;
mod digits_q;
mod placement;
mod selection;
mod tree;

pub use diagnostics::{
    alpha, block_boundary_ratios, k_for_delta, step_diagnostics, Step1Entry, BReading, BTally, PTable, Step1Report, Step2Report, Step3Report,
    StepReport,
};
pub use digits_q::{q_sequence, QSequence, QStatus};
pub use placement::{depth_for_count, place_intervals, BlockIndex, PlacedFamily, Placement};
pub use selection::{a_prime_member, compute_y, compute_z, Shift};
pub use tree::{block_offset, build_k_hierarchy, SpacingTree, TerminalRef};

