//! Experiment protocols, configuration files and output artifacts.

pub mod config;
pub mod export;
pub mod placement;
pub mod protocol;

pub use config::{ExperimentConfig, MarkerPlacement, Mode};
pub use export::export_artifacts;
pub use placement::place_markers_zoned;
pub use protocol::{
    cluster_once, load_dataset, run_antids_a, run_antids_b, run_experiment, Dataset, Experiment,
    RunOutcome, RunReport,
};
