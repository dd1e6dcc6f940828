//! Grounding and answer-set enumeration.

mod ground;
mod solve;

pub use ground::{ground, GroundError, GroundingContext};

pub use solve::{add_block, enumerate, fingerprint, is_projected, BlockSet, Fingerprint, Solver, SolverStats};
