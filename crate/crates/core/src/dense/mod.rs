//! Dense row-major storage and the numerical kernels built on it.

mod cholesky;
mod gemm;
mod index;
pub mod io;
mod ldlt;
mod matrix;
mod norm;

pub use cholesky::{
    chol_solve, cholesky, cholesky_with_block_size, spd_inverse, CholeskyFactor,
    DEFAULT_BLOCK_SIZE, SYMMETRY_TOL,
};
pub use gemm::{gemm, matmul, matmul_op, Op};
pub use index::{gather, scatter, ScatterMode};
pub use ldlt::{ldlt, LdlFactor};
pub use matrix::DenseMatrix;
pub use norm::{
    condition_number_2, condition_number_2_with, two_norm, two_norm_with, ConditionEstimate,
    NormEstimate, PowerConfig,
};

pub(crate) use index::scatter_transposed;
pub(crate) use norm::{power_iteration, symv};
