//! Quasi-adiabatic preparation of ordered Rydberg-excitation states in finite
//! 1D atom chains.
//!
//! Energies and frequencies are in units of 2π·MHz and times in μs. The 2π
//! needed for phase evolution is applied inside [`propagate`] only.

pub mod analysis;
pub mod basis;
pub mod classical;
pub mod eigen;
pub mod error;
pub mod hamiltonian;
pub mod lzmodel;
pub mod ode;
pub mod propagate;
pub mod pulse;
pub mod spectrum;

pub use basis::{Configuration, LatticeSpec, StateVector};
pub use error::{Error, Result};
pub use hamiltonian::{DiagonalCache, HamiltonianParams};
pub use pulse::{Drive, LinearSweep, PulseSchedule, RampShape};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
