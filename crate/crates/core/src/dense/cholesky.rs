use super::gemm::dgemm_raw;
use super::DenseMatrix;
use crate::error::{shape_mismatch, Error, Result};

/// Panel width used by the blocked factorization and triangular solves.
pub const DEFAULT_BLOCK_SIZE: usize = 64;

/// Relative elementwise tolerance for the symmetry precondition.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: DenseMatrix,
    block_size: usize,
    // Inverses of the diagonal blocks of `l`, one per panel.
    diag_inv: Vec<DenseMatrix>,
}

impl CholeskyFactor {
    pub fn l(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn into_l(self) -> DenseMatrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L Lᵀ X = B`.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let mut x = b.clone();
        self.solve_lower_in_place(&mut x)?;
        self.solve_upper_in_place(&mut x)?;
        Ok(x)
    }

    /// Overwrites `x` with `L⁻¹ x`.
    pub fn solve_lower_in_place(&self, x: &mut DenseMatrix) -> Result<()> {
        let n = self.dim();
        if x.rows() != n {
            return Err(shape_mismatch((n, x.cols()), x.shape()));
        }
        let nc = x.cols();
        let lp = self.l.as_slice().as_ptr();
        for (b, t) in self.diag_inv.iter().enumerate() {
            let i0 = b * self.block_size;
            let ib = t.rows();
            if i0 > 0 {
                let xp = x.as_mut_slice().as_mut_ptr();
                // SAFETY: rows i0..i0+ib of x are written, rows 0..i0 are read.
                unsafe {
                    dgemm_raw(
                        ib,
                        i0,
                        nc,
                        -1.0,
                        lp.add(i0 * n),
                        n as isize,
                        1,
                        xp,
                        nc as isize,
                        1,
                        1.0,
                        xp.add(i0 * nc),
                        nc as isize,
                        1,
                    );
                }
            }
            apply_block(t, false, x, i0);
        }
        Ok(())
    }

    /// Overwrites `x` with `L⁻ᵀ x`.
    pub fn solve_upper_in_place(&self, x: &mut DenseMatrix) -> Result<()> {
        let n = self.dim();
        if x.rows() != n {
            return Err(shape_mismatch((n, x.cols()), x.shape()));
        }
        let nc = x.cols();
        let lp = self.l.as_slice().as_ptr();
        for (b, t) in self.diag_inv.iter().enumerate().rev() {
            let i0 = b * self.block_size;
            let ib = t.rows();
            let i1 = i0 + ib;
            if i1 < n {
                let xp = x.as_mut_slice().as_mut_ptr();
                // SAFETY: rows i0..i1 of x are written, rows i1..n are read.
                unsafe {
                    dgemm_raw(
                        ib,
                        n - i1,
                        nc,
                        -1.0,
                        lp.add(i1 * n + i0),
                        1,
                        n as isize,
                        xp.add(i1 * nc),
                        nc as isize,
                        1,
                        1.0,
                        xp.add(i0 * nc),
                        nc as isize,
                        1,
                    );
                }
            }
            apply_block(t, true, x, i0);
        }
        Ok(())
    }
}

// x[i0..i0+ib, :] <- op(t) * x[i0..i0+ib, :]
fn apply_block(t: &DenseMatrix, transpose: bool, x: &mut DenseMatrix, i0: usize) {
    let ib = t.rows();
    let nc = x.cols();
    let tmp = x.as_slice()[i0 * nc..(i0 + ib) * nc].to_vec();
    let (rs, cs) = if transpose { (1, ib as isize) } else { (ib as isize, 1) };
    // SAFETY: `tmp` is a private copy; the destination rows lie inside `x`.
    unsafe {
        dgemm_raw(
            ib,
            ib,
            nc,
            1.0,
            t.as_slice().as_ptr(),
            rs,
            cs,
            tmp.as_ptr(),
            nc as isize,
            1,
            0.0,
            x.as_mut_slice().as_mut_ptr().add(i0 * nc),
            nc as isize,
            1,
        );
    }
}

pub fn cholesky(a: &DenseMatrix) -> Result<CholeskyFactor> {
    cholesky_with_block_size(a, DEFAULT_BLOCK_SIZE)
}

/// Right-looking blocked Cholesky. Only the lower triangle of `a` is read after
/// the symmetry check.
pub fn cholesky_with_block_size(a: &DenseMatrix, block_size: usize) -> Result<CholeskyFactor> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    if let Some((row, col)) = a.symmetry_violation(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric { row, col });
    }
    let n = a.rows();
    let nb = block_size.max(1);
    let mut l = a.clone();
    let mut diag_inv = Vec::with_capacity(n.div_ceil(nb));

    let mut j0 = 0;
    while j0 < n {
        let jb = nb.min(n - j0);
        factor_diagonal_block(&mut l, j0, jb)?;
        let tinv = invert_diagonal_block(&l, j0, jb);
        let r0 = j0 + jb;
        if r0 < n {
            let nr = n - r0;
            let mut panel = vec![0.0; nr * jb];
            for i in 0..nr {
                panel[i * jb..(i + 1) * jb].copy_from_slice(&l.row(r0 + i)[j0..j0 + jb]);
            }
            let lp = l.as_mut_slice().as_mut_ptr();
            // SAFETY: the panel is read from a private copy; T⁻ᵀ is a separate buffer.
            unsafe {
                dgemm_raw(
                    nr,
                    jb,
                    jb,
                    1.0,
                    panel.as_ptr(),
                    jb as isize,
                    1,
                    tinv.as_slice().as_ptr(),
                    1,
                    jb as isize,
                    0.0,
                    lp.add(r0 * n + j0),
                    n as isize,
                    1,
                );
            }
            // Trailing update, lower block rows only.
            let mut i0 = r0;
            while i0 < n {
                let ib = nb.min(n - i0);
                let width = i0 + ib - r0;
                // SAFETY: reads columns j0..r0 and writes columns r0.. of the same
                // rows, so the regions are disjoint.
                unsafe {
                    dgemm_raw(
                        ib,
                        jb,
                        width,
                        -1.0,
                        lp.add(i0 * n + j0),
                        n as isize,
                        1,
                        lp.add(r0 * n + j0),
                        1,
                        n as isize,
                        1.0,
                        lp.add(i0 * n + r0),
                        n as isize,
                        1,
                    );
                }
                i0 += ib;
            }
        }
        diag_inv.push(tinv);
        j0 += jb;
    }
    for i in 0..n {
        l.row_mut(i)[i + 1..].iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(CholeskyFactor {
        l,
        block_size: nb,
        diag_inv,
    })
}

fn factor_diagonal_block(l: &mut DenseMatrix, j0: usize, jb: usize) -> Result<()> {
    let n = l.cols();
    let d = l.as_mut_slice();
    for j in j0..j0 + jb {
        let rj = j * n;
        let s = d[rj + j] - dot(&d[rj + j0..rj + j], &d[rj + j0..rj + j]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite(j));
        }
        let piv = s.sqrt();
        d[rj + j] = piv;
        for i in j + 1..j0 + jb {
            let ri = i * n;
            let s = d[ri + j] - dot(&d[ri + j0..ri + j], &d[rj + j0..rj + j]);
            d[ri + j] = s / piv;
        }
    }
    Ok(())
}

fn invert_diagonal_block(l: &DenseMatrix, j0: usize, jb: usize) -> DenseMatrix {
    let mut x = DenseMatrix::zeros(jb, jb);
    for j in 0..jb {
        x[(j, j)] = 1.0 / l[(j0 + j, j0 + j)];
        for i in j + 1..jb {
            let mut s = 0.0;
            for k in j..i {
                s += l[(j0 + i, j0 + k)] * x[(k, j)];
            }
            x[(i, j)] = -s / l[(j0 + i, j0 + i)];
        }
    }
    x
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Solves `A X = B` given the Cholesky factor of `A`.
pub fn chol_solve(f: &CholeskyFactor, b: &DenseMatrix) -> Result<DenseMatrix> {
    f.solve(b)
}

/// Explicit inverse of an SPD matrix via Cholesky and triangular solves against
/// the identity. The result is symmetrized, so it equals its transpose exactly.
pub fn spd_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let f = cholesky(a)?;
    let mut x = f.solve(&DenseMatrix::identity(a.rows()))?;
    x.symmetrize();
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::matmul_op;
    use crate::dense::Op;

    fn assert_close(a: &DenseMatrix, b: &DenseMatrix) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-15 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    fn spd(n: usize) -> DenseMatrix {
        let m = DenseMatrix::from_fn(n, n, |i, j| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 7.0);
        let mut a = matmul_op(&m, Op::Trans, &m, Op::NoTrans).unwrap();
        a.symmetrize();
        a.shift_diagonal(n as f64);
        a
    }

    #[test]
    fn identity_factor() {
        let f = cholesky(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.l(), &DenseMatrix::identity(3));
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let f = cholesky(&a).unwrap();
        let l = f.l();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((l[(1, 1)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite(1))));
        let b = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]).unwrap();
        assert!(matches!(cholesky(&b), Err(Error::NotSymmetric { .. })));
        assert!(cholesky(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn block_size_does_not_change_result_materially() {
        let a = spd(150);
        let f1 = cholesky_with_block_size(&a, 1).unwrap();
        let f64b = cholesky_with_block_size(&a, 64).unwrap();
        let f7 = cholesky_with_block_size(&a, 7).unwrap();
        for (x, y) in f1.l().as_slice().iter().zip(f64b.l().as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        for (x, y) in f1.l().as_slice().iter().zip(f7.l().as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn solve_examples() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let f = cholesky(&a).unwrap();
        let x = chol_solve(&f, &DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap()).unwrap();
        assert!((x[(0, 0)] - 0.375).abs() < 1e-15);
        assert!((x[(1, 0)] + 0.25).abs() < 1e-15);

        let f = cholesky(&DenseMatrix::from_diag(&[2.0, 4.0])).unwrap();
        let x = chol_solve(&f, &DenseMatrix::identity(2)).unwrap();
        assert_close(&x, &DenseMatrix::from_diag(&[0.5, 0.25]));

        let f = cholesky(&DenseMatrix::identity(3)).unwrap();
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i + 10 * j) as f64);
        assert_eq!(chol_solve(&f, &b).unwrap(), b);
        assert!(chol_solve(&f, &DenseMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            spd_inverse(&DenseMatrix::identity(5)).unwrap(),
            DenseMatrix::identity(5)
        );
        assert_close(
            &spd_inverse(&DenseMatrix::from_diag(&[2.0, 4.0, 8.0])).unwrap(),
            &DenseMatrix::from_diag(&[0.5, 0.25, 0.125]),
        );
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let inv = spd_inverse(&a).unwrap();
        let want = [3.0 / 8.0, -2.0 / 8.0, -2.0 / 8.0, 4.0 / 8.0];
        for (g, w) in inv.as_slice().iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn multi_panel_solve_residual() {
        let a = spd(200);
        let f = cholesky_with_block_size(&a, 16).unwrap();
        let b = DenseMatrix::from_fn(200, 3, |i, j| ((i * (j + 1)) as f64).sin());
        let x = f.solve(&b).unwrap();
        let r = crate::dense::matmul(&a, &x).unwrap().sub(&b).unwrap();
        assert!(r.frobenius_norm() / b.frobenius_norm() < 1e-12);
    }
}
