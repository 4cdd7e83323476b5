//! Free-fermion lattice dynamics: a hopping ring, the transverse-field
//! Ising chain, and the non-Hermitian no-click evolution.

mod hopping;
mod ising;
mod noclick;

pub use hopping::{apply_propagator, HoppingModel};
pub use ising::{majorana_propagator, Boundary, IsingModel, Parity};
pub use noclick::{evolve_noclick, noclick_generator, ModeMatrix, NoClickGenerator};
