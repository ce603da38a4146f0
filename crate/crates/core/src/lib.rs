//! Numerics for a non-Hermitian Su-Schrieffer-Heeger chain coupled to a single
//! cavity mode through Peierls phases.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: truncated single-mode operator algebra and reference states.
//! * [`lattice`]: open-chain Hamiltonians, spectra, non-Bloch dispersion and winding.
//! * [`meanfield`]: the self-consistent electron/photon product-state solver.
//! * [`phasespace`]: Wigner functions, fidelities, SDSc fits and the semiclassical landscape.
//! * [`metrology`]: phase-estimation Fisher information and nonclassicality.
//! * [`response`]: current operators, current-current correlation and the photon spectral function.
//!
//! Parameter sweeps go through [`par`], which runs on rayon when the `parallel`
//! feature is enabled (the default) and falls back to plain iterators otherwise.

pub mod error;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod meanfield;
pub mod metrology;
pub mod par;
pub mod phasespace;
pub mod response;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for every operator in the crate.
pub type CMatrix = faer::Mat<C64>;
