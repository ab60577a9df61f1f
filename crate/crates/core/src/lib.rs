//! Klein tunneling of ultracold atoms in a bichromatic optical lattice.
//!
//! The crate works in dimensionless recoil units throughout: energies in
//! `E_r = ħ²k²/2m`, lengths in `1/k`, times in `ħ/E_r` and momenta in `ħk`.
//! Only [`units`] touches SI quantities.
//!
//! The pipeline is:
//!
//! 1. [`bandstructure`] diagonalizes the plane-wave Bloch Hamiltonian of
//!    `V(z) = V1/2 cos(2kz) + V2/2 cos(4kz + φ)` and reduces the crossing of
//!    the first two excited bands to [`DiracParams`].
//! 2. [`dirac`] propagates the effective two-component Dirac equation through
//!    the gravity-tilted Gaussian barrier with a Strang split-step scheme.
//! 3. [`schrodinger`] propagates the full scalar Schrödinger equation in the
//!    lattice plus slow potential; it is the microscopic oracle for step 2.
//! 4. [`experiments`] composes these into phase and barrier-height sweeps.

pub mod bandstructure;
pub mod config;
pub mod dirac;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod field;
pub mod io;
pub mod plot;
pub mod schrodinger;
pub mod units;

mod roots;

pub use bandstructure::{DiracParams, LatticeParams};
pub use dirac::{SlowPotential, SpinorField};
pub use error::{Error, Result};
pub use exec::Execution;
pub use field::GridSpec;
pub use field::TransmissionResult;
pub use schrodinger::ScalarField;
pub use units::{PhysicalConstants, RecoilScale};
