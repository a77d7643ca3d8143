use super::DenseMatrix;
use crate::error::{shape_mismatch, Error, Result};

/// Write mode for [`scatter`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScatterMode {
    Assign,
    Add,
}

fn check_range(idx: &[usize], bound: usize) -> Result<()> {
    match idx.iter().find(|&&i| i >= bound) {
        Some(&index) => Err(Error::IndexOutOfRange { index, bound }),
        None => Ok(()),
    }
}

fn contiguous_start(idx: &[usize]) -> Option<usize> {
    let first = *idx.first()?;
    idx.iter()
        .enumerate()
        .all(|(k, &i)| i == first + k)
        .then_some(first)
}

/// `out[i][j] = a[rows[i]][cols[j]]`.
pub fn gather(a: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix> {
    check_range(rows, a.rows())?;
    check_range(cols, a.cols())?;
    let mut out = DenseMatrix::zeros(rows.len(), cols.len());
    let run = contiguous_start(cols);
    for (i, &r) in rows.iter().enumerate() {
        let src = a.row(r);
        let dst = out.row_mut(i);
        match run {
            Some(c0) => dst.copy_from_slice(&src[c0..c0 + cols.len()]),
            None => {
                for (d, &c) in dst.iter_mut().zip(cols) {
                    *d = src[c];
                }
            }
        }
    }
    Ok(out)
}

/// Writes `src` into `target[rows[i]][cols[j]]`, overwriting or accumulating.
pub fn scatter(
    target: &mut DenseMatrix,
    rows: &[usize],
    cols: &[usize],
    src: &DenseMatrix,
    mode: ScatterMode,
) -> Result<()> {
    if src.shape() != (rows.len(), cols.len()) {
        return Err(shape_mismatch((rows.len(), cols.len()), src.shape()));
    }
    check_range(rows, target.rows())?;
    check_range(cols, target.cols())?;
    let run = contiguous_start(cols);
    for (i, &r) in rows.iter().enumerate() {
        let s = src.row(i);
        let dst = target.row_mut(r);
        match (mode, run) {
            (ScatterMode::Assign, Some(c0)) => dst[c0..c0 + cols.len()].copy_from_slice(s),
            (ScatterMode::Assign, None) => {
                for (&c, &v) in cols.iter().zip(s) {
                    dst[c] = v;
                }
            }
            (ScatterMode::Add, _) => {
                for (&c, &v) in cols.iter().zip(s) {
                    dst[c] += v;
                }
            }
        }
    }
    Ok(())
}

/// Writes `alpha * srcᵀ` into `target[rows[i]][cols[j]]`, where `src` is
/// `cols.len() x rows.len()`.
pub(crate) fn scatter_transposed(
    target: &mut DenseMatrix,
    rows: &[usize],
    cols: &[usize],
    src: &DenseMatrix,
    alpha: f64,
) -> Result<()> {
    if src.shape() != (cols.len(), rows.len()) {
        return Err(shape_mismatch((cols.len(), rows.len()), src.shape()));
    }
    check_range(rows, target.rows())?;
    check_range(cols, target.cols())?;
    let n = src.cols();
    let s = src.as_slice();
    for (i, &r) in rows.iter().enumerate() {
        let dst = target.row_mut(r);
        for (j, &c) in cols.iter().enumerate() {
            dst[c] = alpha * s[j * n + i];
        }
    }
    Ok(())
}
