//! Numerics for non-ideal measurements and semiclassical broadcasting of
//! measurement statistics into thermal quantum memories.
//!
//! - [`qcore`]: dense density operators, partial traces, entropies.
//! - [`thermal`]: memory Hamiltonians, Gibbs states, energy grouping, `C_max`.
//! - [`interact`]: controlled-permutation and swap interactions, transition matrices.
//! - [`infotherm`]: Holevo quantity, entropy production, SBS test, classification of information relations.
//! - [`broadcast`]: multi-component memories, no-go witness, reconstruction.

pub mod broadcast;
pub mod error;
pub mod infotherm;
pub mod interact;
pub mod qcore;
pub mod thermal;

pub use error::{Error, Result};
