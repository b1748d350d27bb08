//! Experiment driver: configs, single runs, resumable sweeps and plot tables.

pub mod config;
pub mod experiment;
pub mod plotdata;
pub mod sweep;

use sha2::{Digest, Sha256};

pub use config::{AnsatzConfig, ExperimentConfig, InitialHamiltonian, MethodOptions, StartKind};
pub use experiment::{
    append_rows, config_key, load_hamiltonian, persist_outcome, prepare, read_rows, run_experiment, write_rows,
    CachedHamiltonian, ExperimentOutcome, MolecularProblem, PreparedExperiment, ResultRow, CHEMICAL_ACCURACY,
};
pub use plotdata::{emit_plotdata, PlotKind};
pub use sweep::{run_sweep, SweepConfig, SweepOptions, SweepReport};

/// Overrides the output directory.
pub const ENV_OUT: &str = "HVQE_OUT";
/// Overrides sweep parallelism.
pub const ENV_JOBS: &str = "HVQE_JOBS";

pub(crate) fn hash_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
