//! PAGE: a probabilistic gradient estimator for nonconvex finite-sum and
//! online optimization, with the theory-driven parameter choices and
//! executable checks of the inequalities that bound its complexity.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod estimator;
pub mod linalg;
pub mod optimizer;
pub mod problems;
pub mod rng;
pub mod theory;
pub mod verifier;

pub use estimator::{Branch, EstimatorError, EstimatorParams, EstimatorState};
pub use linalg::{LinalgError, Matrix, Vector};
pub use optimizer::{run_gd, run_page, run_sgd, PageConfig, RunError, RunResult, TelemetryRecord};
pub use problems::{ComponentCount, FiniteSumProblem, ProblemConstants, ProblemError};
pub use rng::RandomSource;
pub use theory::{auto_config, Mode, TheoryError, TheoryPlan};
pub use verifier::{CheckReport, VerifyError};
