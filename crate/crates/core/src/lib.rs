//! Multiparty quantum data hiding with threshold access structures.
//!
//! Quantum data on `C^s` is hidden among `n` parties, each holding a
//! `d`-dimensional share, by applying one of `r` Haar-random unitaries chosen
//! uniformly at random. Any `k` parties, given classical measurement outcomes
//! from the rest, recover the data with a transpose-channel decoder; groupings
//! of fewer than `k` parties restricted to separable measurements learn almost
//! nothing.
//!
//! The crate simulates the protocol end to end at desk scale and checks the
//! inequalities behind its security and correctness numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod pgm;
pub mod precise;
pub mod random;
pub mod scheme;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use linalg::{CMatrix, CVector, DensityOperator, KrausChannel, PureState, C64};
pub use random::SeededRng;
