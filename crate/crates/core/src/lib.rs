//! Certified lower bounds (and simple variational upper bounds) on the
//! ground-state energy density of translation-invariant nearest-neighbour
//! lattice Hamiltonians.

pub mod anderson;
pub mod caps;
pub mod eigen;
pub mod error;
pub mod hamiltonian;
pub mod marginal;
pub mod method;
pub mod moment;
pub mod operator;
pub mod pauli;
pub mod report;
pub mod sdp;
pub mod upper;

pub use error::{Error, Result};
