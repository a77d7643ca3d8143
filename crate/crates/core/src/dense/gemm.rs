//! General matrix multiply, backed by `matrixmultiply`'s packed micro-kernels.

use super::DenseMatrix;
use crate::error::{shape_mismatch, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    NoTrans,
    Trans,
}

impl Op {
    fn apply(self, (r, c): (usize, usize)) -> (usize, usize) {
        match self {
            Op::NoTrans => (r, c),
            Op::Trans => (c, r),
        }
    }

    fn strides(self, cols: usize) -> (isize, isize) {
        match self {
            Op::NoTrans => (cols as isize, 1),
            Op::Trans => (1, cols as isize),
        }
    }
}

/// `c <- alpha * op(a) * op(b) + beta * c`.
///
/// With `beta == 0` the previous contents of `c` are ignored, NaNs included.
pub fn gemm(
    alpha: f64,
    a: &DenseMatrix,
    op_a: Op,
    b: &DenseMatrix,
    op_b: Op,
    beta: f64,
    c: &mut DenseMatrix,
) -> Result<()> {
    let (m, k) = op_a.apply(a.shape());
    let (kb, n) = op_b.apply(b.shape());
    if k != kb {
        return Err(shape_mismatch((m, k), (kb, n)));
    }
    if c.shape() != (m, n) {
        return Err(shape_mismatch((m, n), c.shape()));
    }
    let (rsa, csa) = op_a.strides(a.cols());
    let (rsb, csb) = op_b.strides(b.cols());
    let ldc = c.cols() as isize;
    // SAFETY: all three buffers are distinct allocations whose extents match the
    // dimensions and strides checked above.
    unsafe {
        dgemm_raw(
            m,
            k,
            n,
            alpha,
            a.as_slice().as_ptr(),
            rsa,
            csa,
            b.as_slice().as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_slice().as_mut_ptr(),
            ldc,
            1,
        );
    }
    Ok(())
}

/// Returns `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    matmul_op(a, Op::NoTrans, b, Op::NoTrans)
}

/// Returns `op(a) * op(b)`.
pub fn matmul_op(a: &DenseMatrix, op_a: Op, b: &DenseMatrix, op_b: Op) -> Result<DenseMatrix> {
    let (m, _) = op_a.apply(a.shape());
    let (_, n) = op_b.apply(b.shape());
    let mut c = DenseMatrix::zeros(m, n);
    gemm(1.0, a, op_a, b, op_b, 0.0, &mut c)?;
    Ok(c)
}

/// Strided `c <- alpha * a * b + beta * c` on raw pointers.
///
/// # Safety
/// Every pointer must address a region covering its operand at the given strides,
/// and `c` must not overlap `a` or `b`.
#[allow(clippy::too_many_arguments)]
pub(crate) unsafe fn dgemm_raw(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    rsa: isize,
    csa: isize,
    b: *const f64,
    rsb: isize,
    csb: isize,
    beta: f64,
    c: *mut f64,
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
}
