//! Linear-algebra kernels: tridiagonal systems and sparse symmetric eigenproblems.

pub mod sparse;
pub mod tridiag;

pub use sparse::{lowest_eigenpairs, Eigenpairs, SparseSymmetric};
pub use tridiag::{solve_tridiagonal, sturm_count, tridiagonal_eigenvalues, tridiagonal_eigenvector};
