#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod averaging;
pub mod cli;
pub mod correlator;
pub mod crossover;
pub mod error;
pub mod fock;
pub mod geometry;
pub mod loops;
pub mod numerics;
pub mod rng;
pub mod unitary;
pub mod verify;
pub mod weyl;

pub use error::{Error, Result};
