//! Experiment orchestration: configs, replicates, sweeps, output files and
//! checkpoints.

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod output;
pub mod stirring;
pub mod trace;

pub use checkpoint::{fingerprint, Checkpoint, SavedGrid};
pub use config::{
    ExperimentConfig, GeometrySection, InitialCondition, ModelSection, OutputSection, RunSection,
};
pub use experiment::{
    checkpoint_path, config_fingerprint, run_experiment, run_replicate, snapshot_path, sweep,
    sweep_csv, trace_path, ExperimentResult, ReplicateOutcome, ReplicateStatus, RunControl,
    SweepRow,
};
pub use output::{atomic_write, emit_csv, emit_snapshot, ppm_bytes, DEFAULT_PALETTE};
pub use stirring::{compare_stirring, StirringComparison, StirringSetup};
pub use trace::{detect_coexistence, CoexistenceVerdict, DensityTrace};

/// Trace columns whose joint persistence counts as coexistence.
///
/// Vacant or empty states are excluded. For host-pathogen the host is
/// represented by its healthy column and the competitor by its own; the
/// count model uses both per-site columns.
pub fn species_codes(model: &str, alphabet: usize) -> Vec<usize> {
    match model {
        "host-pathogen" => vec![0, 2],
        "voter" | "prisoners-dilemma" => (0..alphabet).collect(),
        _ => (1..alphabet).collect(),
    }
}
