//! Experiment harness for `page-core`: JSON manifests, CSV telemetry, the
//! verifier suite, complexity sweeps and the `page-opt` command line.

pub mod cli;
pub mod compare;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod output;
pub mod spec;
pub mod sweep;
pub mod verify;

pub use error::{HarnessError, Result};
pub use spec::{Algorithm, ExperimentSpec, InitSpec, ModeSpec, ProblemSpec};
