//! Batch experiments: configuration, runners, CSV output, spectrum cache and
//! per-cell checkpoints.
//!
//! All runners merge per-state results in ensemble-index order, so output is
//! byte-identical for a given configuration whatever the thread count.

pub mod asymptotic;
pub mod cache;
pub mod config;
pub mod criteria;
pub mod evolution;
pub mod output;
pub mod reports;

pub use asymptotic::{run_asymptotic_sweep, run_eigen_sweep, run_scaling_experiment, AsymptoticRow};
pub use cache::SpectrumCache;
pub use config::{AsymptoticMethod, EnsembleSelection, ExperimentConfig};
pub use evolution::{fit_initial_rate, run_evolution_experiment, run_rate_experiment, EntanglementTrace, RateFit};
pub use output::{Checkpoints, OutputDir, Table};
