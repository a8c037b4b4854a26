//! Linear algebra kernels: banded LU, shift-invert Arnoldi, dense helpers.

pub mod arnoldi;
pub mod banded;
pub mod dense;
pub mod sparse;

use thiserror::Error;

pub use arnoldi::{shift_invert, ArnoldiOptions, EigenPairs};
pub use banded::{BandMatrix, BandedLu};
pub use sparse::CsrMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("zero or non-finite pivot at column {index}")]
    SingularPivot { index: usize },
    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
}
