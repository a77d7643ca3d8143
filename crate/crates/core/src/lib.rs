//! Iterative block matrix inversion (IBMI) for dense symmetric positive definite
//! matrices, with the kernel-matrix generators, partitions, convergence analysis
//! and cost model that go with it.

pub mod analysis;
pub mod dense;
pub mod error;
pub mod kernels;
pub mod partition;
pub mod solver;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
