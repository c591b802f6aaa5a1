//! Dense matrices, symmetric eigensolvers and Gram-matrix operators.

mod dense;
mod lanczos;
mod operators;
mod tridiagonal;

pub use dense::{symmetric_eigenvalues, Mat};
pub use lanczos::{top_eigenvalues, LanczosOptions, SymmetricOperator};
pub use operators::{DiagGramOp, GramOp, TriangularGramOp};
pub use tridiagonal::tridiagonal_eigen;
