use super::cholesky::{dot, SYMMETRY_TOL};
use super::DenseMatrix;
use crate::error::{shape_mismatch, Error, Result};

/// `A = L D Lᵀ` with `L` unit lower triangular.
#[derive(Clone, Debug)]
pub struct LdlFactor {
    pub l: DenseMatrix,
    pub d: Vec<f64>,
}

impl LdlFactor {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::from_fn(n, n, |i, j| {
            let m = i.min(j);
            (0..=m).map(|k| self.l[(i, k)] * self.d[k] * self.l[(j, k)]).sum()
        })
    }
}

/// Unpivoted row-oriented LDLᵀ. Fails with `ZeroPivot(k)` when
/// `|d_k| < 1e-14 * max|a|`.
pub fn ldlt(a: &DenseMatrix) -> Result<LdlFactor> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    if let Some((row, col)) = a.symmetry_violation(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric { row, col });
    }
    let n = a.rows();
    let threshold = 1e-14 * a.max_abs();
    let mut l = DenseMatrix::zeros(n, n);
    // ld[j][k] = l[j][k] * d[k], kept so every inner product is contiguous.
    let mut ld = DenseMatrix::zeros(n, n);
    let mut d = vec![0.0; n];

    for i in 0..n {
        for j in 0..i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &ld.row(j)[..j]);
            l[(i, j)] = s / d[j];
        }
        for k in 0..i {
            ld[(i, k)] = l[(i, k)] * d[k];
        }
        let di = a[(i, i)] - dot(&l.row(i)[..i], &ld.row(i)[..i]);
        if !(di.abs() >= threshold) || di == 0.0 {
            return Err(Error::ZeroPivot(i));
        }
        d[i] = di;
        l[(i, i)] = 1.0;
    }
    Ok(LdlFactor { l, d })
}
