//! Simulation of two weakly coupled quantum kicked tops.
//!
//! The crate covers the whole pipeline used to study how the kick strength
//! shapes global entanglement production:
//!
//! * [`spin`]: angular momentum matrices, rotations and spin-coherent states;
//! * [`states`]: the spin-coherent and Haar-random product ensembles;
//! * [`floquet`]: the one-kick unitary, factored evolution and diagonalization;
//! * [`entanglement`]: partial traces, linear and von Neumann entropies;
//! * [`spectral`]: eigenvector entanglement and the time-averaged asymptotics;
//! * [`perturbative`]: correlation functions and weak-coupling growth rates;
//! * [`classical`]: the classical maps and Lyapunov exponents;
//! * [`moments`]: closed-form ensemble moments with Monte Carlo checks;
//! * [`experiments`]: configurable batch experiments writing CSV output.

pub mod classical;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod floquet;
pub mod linalg;
pub mod moments;
pub mod perturbative;
pub mod spectral;
pub mod spin;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
