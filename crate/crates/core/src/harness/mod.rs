//! Experiment plumbing: configuration, the training loop, metrics files,
//! checkpoints, loss-landscape slices and hyperparameter sweeps.

pub mod checkpoint;
pub mod config;
pub mod landscape;
pub mod metrics;
pub mod runner;
pub mod sweep;

pub use checkpoint::Checkpoint;
pub use config::{ExperimentConfig, RunSettings, TaskKind, TaskSettings};
pub use landscape::{filter_normalized_direction, landscape_slice, LandscapeGrid};
pub use metrics::{grad_norm_std, grokking_epoch, BlockMetrics, MetricsRecord};
pub use runner::{run_experiment, run_to_dir, train, RunArtifacts, RunResult, RunSummary, Trainer};
pub use sweep::{parse_grid, sensitivity_sweep, GridAxis, SweepResult};
