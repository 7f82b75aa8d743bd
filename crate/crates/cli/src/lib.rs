//! Experiment drivers behind the `treepotts` binary: configuration, the
//! per-command runs, and CSV/SVG/JSON output.

pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;

pub use config::{Command, ExperimentConfig, Point};
pub use experiments::run;
pub use report::{write_outputs, Check, Outcome};
