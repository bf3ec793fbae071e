//! Driven one-dimensional lattices: Floquet operators and effective
//! Hamiltonians, boundary-induced PT-symmetry breaking, exceptional points
//! and scale-free localisation.

pub mod bch;
pub mod error;
pub mod fit;
pub mod floquet;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod sweep;
pub mod symmetry;

pub use error::{Error, Result};
