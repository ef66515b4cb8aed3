//! Configured convergence experiments and their reports.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{BoundVariant, ExperimentConfig, FolnerSpec, ObservableFile, ObservableSpec, SystemSpec};
pub use report::{AverageRow, BorelCantelliSeries, ConvergenceReport, DoobRow, RunConstants};
pub use runner::{resolve_threads, run_convergence, THREADS_ENV};
