//! Configuration, execution and persistence of experiments.
//!
//! * [`ini`]: the sectioned key-value config reader.
//! * [`config`]: typed experiment configuration and its resolution.
//! * [`run`]: run, certify and write the CSV, JSON and SVG artifacts.
//! * [`sweep`]: parameter and seed sweeps over a base config.
//! * [`output`]: CSV layouts and re-certification from CSV.
//! * [`plot`]: deterministic SVG line plots.
//! * [`selfcheck`]: internal consistency checks with negative controls.

pub mod config;
pub mod ini;
pub mod output;
pub mod plot;
pub mod run;
pub mod selfcheck;
pub mod sweep;

pub use config::{ExperimentConfig, ResolvedExperiment};
pub use ini::Ini;
pub use output::{certify_csv, certify_csv_text, continuous_csv, trace_csv, CsvCertificate};
pub use plot::{emit_plot, PlotStyle, Series};
pub use run::{execute, run_experiment, Outcome, RunArtifacts, Summary};
pub use sweep::{mean_ci, sweep, Axis, Band, CellResult, SweepOptions, SweepReport};
pub use selfcheck::{selfcheck, Check};
