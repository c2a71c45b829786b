//! Sufficient-precondition inference for constrained Horn clauses over
//! linear integer arithmetic.
//!
//! A program is specialised repeatedly by partial evaluation ([`pe`]),
//! constraint specialisation ([`cs`]) and trace elimination ([`te`]); the
//! negated constraints of the initial clauses of the result form a safe
//! precondition ([`precond`]). [`driver`] runs the whole pipeline.

pub mod chc;
pub mod cs;
pub mod derivation;
pub mod driver;
pub mod error;
pub mod linarith;
pub mod pe;
pub mod polyhedra;
pub mod precond;
pub mod qa;
pub mod te;
#[cfg(test)]
mod testing;

pub use error::{Error, Result};
