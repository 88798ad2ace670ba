//! Hopfield associative memories whose recall step is a ground-state search.
//!
//! Memories are stored with the Hebbian rule; a probe pattern enters only as
//! local fields. Recall then means finding the ground state of the resulting
//! Ising problem, either exactly ([`oracle`]), by simulated quantum annealing
//! ([`quantum`]) or by classical simulated annealing ([`sa`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod attraction;
pub mod capacity;
pub mod chimera;
pub mod error;
pub mod instance;
pub mod ising;
pub mod oracle;
pub mod quantum;
pub mod sa;
pub mod spin;

pub use error::{Error, Result};
pub use ising::{build_problem, IsingProblem, ProbeSpec};
pub use oracle::{classify_recall, ground_set, Classification, GroundSet, RecallOutcome};
pub use spin::{hamming, hebbian_learn, BiasVector, MemorySet, SpinVector, WeightMatrix};
