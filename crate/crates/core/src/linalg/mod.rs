//! Sparse and dense linear algebra used by the solver.
//!
//! The sparse side is a compressed-column matrix type, a nested-dissection fill
//! reducing ordering and a left-looking LU factorisation with threshold partial
//! pivoting. The dense side wraps a column-pivoted Householder QR used for rank
//! decisions and null-space bases.

mod dense;
mod lu;
mod ordering;
mod sparse;

pub use dense::{null_space, PivotedQr};
pub use lu::{LuError, SparseLu, DEFAULT_PIVOT_TOLERANCE};
pub use ordering::nested_dissection;
pub use sparse::{CscMatrix, TripletMatrix};

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Maximum norm.
pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}
