//! Benchmark harness: sequential time stepping against MGRIT on the
//! Dahlquist and coaxial eddy-current problems.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod run;

pub use config::{DahlquistConfig, DahlquistForcing, OutputPaths, Overrides, Problem, RunConfig};
pub use run::{compare, run_mgrit, run_sequential, CompareReport, MgritReport, SequentialReport, StepRow};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("MGRIT stopped after {iterations} iterations with residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("cannot write '{}': {1}", .0.display())]
    Io(PathBuf, String),
}

impl RunError {
    /// 1 validation, 2 solver failure, 3 non-convergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Validation(_) | RunError::Io(..) => 1,
            RunError::Solver(_) => 2,
            RunError::NotConverged { .. } => 3,
        }
    }
}
