//! Few-boson exact diagonalization for a 1D optical lattice with a
//! superimposed harmonic trap.
//!
//! The pipeline: a sin-DVR grid discretizes the hard-wall box, the one-body
//! problem is solved densely, the low bands are rotated into site-localized
//! Wannier states, bosonic number states over those orbitals span the
//! many-body space, and the Hamiltonian is assembled and diagonalized per
//! parity block. On top of that sit trap-frequency spectrum scans with
//! avoided-crossing detection, quench dynamics by spectral decomposition,
//! and the position-variance observables used to characterize the response.
//!
//! Units throughout: recoil energy E_R, inverse wavenumber 1/k, time
//! hbar/E_R. The one-body Hamiltonian is
//! `-d^2/dx^2 + v0 sin^2 x + (omega_sq/4) x^2`.

pub mod bhm;
pub mod ci;
pub mod error;
pub mod fock;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod orbitals;
pub mod quench;
pub mod scan;

pub use error::{Error, Result};
