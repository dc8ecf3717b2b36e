//! Adiabatic separation of a light and a heavy coordinate, checked against
//! exact diagonalization.
//!
//! The modules follow the calculation:
//!
//! * [`grid`] discretizes each coordinate on a Dirichlet box.
//! * [`model`] defines the masses and the interaction `W(x1, x2)`.
//! * [`clamped`] solves the electronic problem at every nuclear grid point,
//!   giving potential energy surfaces.
//! * [`bo`] solves the nuclear problem on a surface and builds adiabatic
//!   product states.
//! * [`exact`] diagonalizes the full Hamiltonian on the product grid.
//! * [`projection`] compresses the full Hamiltonian onto the span of the
//!   lowest slice states.
//! * [`diagnostics`] computes uncertainty products, mass-ratio sweeps and
//!   consolidated reports; [`output`] writes them.

pub mod bo;
pub mod clamped;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod exact;
pub mod grid;
pub mod model;
pub mod output;
pub mod projection;

pub use error::{Error, Result};
