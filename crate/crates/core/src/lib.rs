//! Certified bounds on the entropy and pressure of nearest-neighbor Gibbs
//! measures on Z^2 that satisfy strong spatial mixing.
//!
//! The entropy rate `h(μ)` is squeezed between the conditional entropies of
//! the origin given the boundary of the half box `S_{n-1}` and given the slice
//! `U_n` of the lexicographic past. Each of these is bracketed by extremizing
//! finite-volume specifications over the admissible boundary conditions of a
//! larger box `B_{n+m}`, computed with a strip transfer engine.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod lattice;
pub mod logweight;
pub mod model;
pub mod oracle;
pub mod ssm;
pub mod transfer;

pub use error::{Error, Result};
