//! Real-space Kohn-Sham solver for electrons coupled to cavity photon modes.
//!
//! The electron-photon exchange-correlation potential is obtained in a
//! photon-free local density approximation: a Poisson equation whose source is
//! the directional second derivative of `(3 rho / 8 pi)^(2/3)` along each cavity
//! polarization, optionally scaled by a renormalization factor `eta_c`.
//!
//! Module map:
//! - [`fields`]: grids, scalar fields, finite-difference operators, grid files
//! - [`poisson`]: free-space Poisson solver (Hockney zero padding)
//! - [`cavity`]: bare and dressed cavity modes
//! - [`functionals`]: LDA exchange-correlation and the pxc potential
//! - [`kohn_sham`]: Hamiltonian, eigensolver, and SCF loop
//! - [`oracle`]: exact one-electron Pauli-Fierz ground state on a grid x Fock basis
//! - [`compare`]: density differences, the I metric, and eta_c calibration

pub mod cavity;
pub mod compare;
mod error;
pub mod fields;
pub mod functionals;
pub mod kohn_sham;
pub mod oracle;
pub mod poisson;

pub use error::{Error, Result};
