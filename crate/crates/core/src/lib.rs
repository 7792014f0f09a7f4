//! Classical and semiclassical scattering on surfaces with an
//! asymptotically conic end.
//!
//! The crate is organised bottom-up: [`geometry`] defines the metrics,
//! [`classical`] integrates the Hamiltonian flow and extracts scattering
//! data, [`quantum`] propagates wave functions, [`microlocal`] decides
//! wave front set membership, and [`harness`] binds them into scenarios.

pub mod classical;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod microlocal;
pub mod quantum;
pub mod smooth;

pub use error::{Error, Result};
