//! Minimal dense and sparse matrix support for the factorization code.

mod dense;
mod sparse;
pub mod svd;

pub use dense::DenseMatrix;
pub use sparse::CsrMatrix;
pub use svd::{truncated_svd, Svd};
