//! Benchmark harness for the `ssnstar` solvers: solution verification,
//! parameter grids with CSV/JSON output, and the `ssnstar` command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod grid;
pub mod verify;

use std::path::PathBuf;

pub use grid::{run_bench, BenchGrid, BenchOutput, ResultRow, SummaryRow};
pub use verify::{verify_solution, Verification};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] ssnstar::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> BenchError {
    let path = path.into();
    move |source| BenchError::Io { path, source }
}
