//! Summation, extended-precision expansions and special functions.

pub mod expansion;
pub mod special;
pub mod sum;

pub use expansion::{ComplexExpansion, ComplexTriple, Expansion, TripleDouble};
pub use sum::{ComplexStats, ComplexSum, NeumaierSum, RunningStats};
