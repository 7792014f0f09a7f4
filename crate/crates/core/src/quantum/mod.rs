//! Free comparison dynamics, the identification operator `J`, and the
//! Schrödinger propagator of `−Δ_g + V` on the end.

pub mod chebyshev;
mod coherent;
mod curved;
mod embed;
mod free;
pub(crate) mod grid;
mod operator;
mod state;
pub mod tridiag;

pub use coherent::CoherentState;
pub use curved::{Absorber, CurvedPropagator, EvolutionConfig, Scheme};
pub use embed::{cutoff_j, j_adjoint, j_embed, CUTOFF_END, CUTOFF_START};
pub use free::{free_evolve, gaussian_free_solution};
pub use grid::{dirichlet_size, fft_size, Grid};
pub use state::{CurvedState, FreeState};
