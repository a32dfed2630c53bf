//! Experiment specifications, figure presets, the parallel trial runner and
//! result writers.

pub mod config;
pub mod output;
pub mod presets;
pub mod rng;
pub mod runner;

pub use config::{ExperimentSpec, SweepAxis, SweepParam};
pub use output::{emit, emit_csv, emit_json};
pub use presets::{figure_preset, PRESET_NAMES};
pub use runner::{run_experiment, simulate_point, ResultRow};
