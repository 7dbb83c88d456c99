//! Sparse storage and the direct solver used for every spatial system.

mod csr;
mod lu;

pub use csr::SparseMatrix;
pub use lu::{factorize, Factorization};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SparseError {
    #[error("vector has {got} entries, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("numerically singular pivot {value:e} at index {pivot}")]
    Singular { pivot: usize, value: f64 },
}
