//! Exact simulation lab for complement sampling: given samples from a subset
//! `S` of the `n`-bit strings, output a string outside `S`.
//!
//! Modules, bottom-up:
//! - [`simulator`]: dense statevector engine.
//! - [`subsetstates`]: subset, complement and phase states, closed-form overlaps.
//! - [`swappers`]: quantum swapper circuits and the coupon-collector baseline.
//! - [`classical`]: index-oracle players, bounds and the unique-draw distribution.
//! - [`prp`]: S-AES and explicit-table keyed permutations.
//! - [`game`]: the multi-round referee/player game and transcripts.
//! - [`cli`]: the `csamp` command line.

pub mod error;
pub mod rng;
pub mod simulator;
pub mod subsetstates;
pub mod swappers;
pub mod classical;
pub mod prp;
pub mod game;
pub mod cli;

pub use error::{Error, Result};
