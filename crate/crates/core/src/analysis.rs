//! Convergence theory for the two-block iteration, the flop-cost model, and a
//! Newton–Schultz baseline.
//!
//! With a two-set split `(I_1, I_2)` and `B = A_2⁻¹ A_21 A_1⁻¹ A_12`, the error
//! `E_r = Σ̃_{I_2} − Σ_{I_2}` after `r` sweeps obeys `E_r = Bʳ E_0 (Bᵀ)ʳ`, hence
//! `‖E_r‖₂ ≤ ‖B‖₂^{2r} ‖E_0‖₂`.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::{Serialize, Serializer};

use crate::dense::{
    cholesky, gather, gemm, matmul, scatter, spd_inverse, symv, two_norm, two_norm_with,
    CholeskyFactor, DenseMatrix, Op, PowerConfig, ScatterMode,
};
use crate::error::{shape_mismatch, Error, Result};
use crate::partition::Partition;
use crate::solver::BlockOperator;

/// Largest order accepted by the checks that form the exact inverse.
pub const MAX_ORACLE_ORDER: usize = 512;

fn check_two_sets(p: usize, i1: &[usize], i2: &[usize]) -> Result<()> {
    if i1.is_empty() || i2.is_empty() {
        return Err(Error::InvalidPartition("both sets must be non-empty".into()));
    }
    if i1.len() + i2.len() != p {
        return Err(Error::InvalidPartition(format!(
            "sets of sizes {} and {} do not split {p} indices",
            i1.len(),
            i2.len()
        )));
    }
    let mut seen = vec![false; p];
    for &i in i1.iter().chain(i2) {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, bound: p });
        }
        if seen[i] {
            return Err(Error::InvalidPartition(format!("index {i} is in both sets")));
        }
        seen[i] = true;
    }
    Ok(())
}

struct TwoBlock {
    f1: CholeskyFactor,
    f2: CholeskyFactor,
    a12: DenseMatrix,
    a21: DenseMatrix,
}

impl TwoBlock {
    fn new(a: &DenseMatrix, i1: &[usize], i2: &[usize]) -> Result<Self> {
        if !a.is_square() {
            return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
        }
        check_two_sets(a.rows(), i1, i2)?;
        Ok(Self {
            f1: cholesky(&gather(a, i1, i1)?)?,
            f2: cholesky(&gather(a, i2, i2)?)?,
            a12: gather(a, i1, i2)?,
            a21: gather(a, i2, i1)?,
        })
    }

    /// `B = A_2⁻¹ A_21 A_1⁻¹ A_12`.
    fn contraction_matrix(&self) -> Result<DenseMatrix> {
        let x = self.f1.solve(&self.a12)?;
        let y = matmul(&self.a21, &x)?;
        self.f2.solve(&y)
    }
}

/// `‖A_2⁻¹ A_21 A_1⁻¹ A_12‖₂`; its square bounds the per-sweep error reduction.
pub fn contraction_factor(a: &DenseMatrix, i1: &[usize], i2: &[usize]) -> Result<f64> {
    let b = TwoBlock::new(a, i1, i2)?.contraction_matrix()?;
    Ok(two_norm(&b).value)
}

/// Spectral radius of `A_12 A_2⁻¹ A_21 A_1⁻¹` by power iteration. Its eigenvalues
/// are real and non-negative for SPD `A`, so `‖Cv‖` for unit `v` converges to it.
pub fn spectral_radius_condition(a: &DenseMatrix, i1: &[usize], i2: &[usize]) -> Result<f64> {
    spectral_radius_condition_with(a, i1, i2, &PowerConfig::default())
}

pub fn spectral_radius_condition_with(
    a: &DenseMatrix,
    i1: &[usize],
    i2: &[usize],
    cfg: &PowerConfig,
) -> Result<f64> {
    let tb = TwoBlock::new(a, i1, i2)?;
    let n1 = i1.len();
    let mut v = DenseMatrix::from_vec(n1, 1, vec![1.0 / (n1 as f64).sqrt(); n1])?;
    let mut u = DenseMatrix::zeros(i2.len(), 1);
    let mut prev = f64::NAN;
    let mut rho = 0.0;
    for _ in 0..cfg.max_iterations {
        tb.f1.solve_lower_in_place(&mut v)?;
        tb.f1.solve_upper_in_place(&mut v)?;
        gemm(1.0, &tb.a21, Op::NoTrans, &v, Op::NoTrans, 0.0, &mut u)?;
        tb.f2.solve_lower_in_place(&mut u)?;
        tb.f2.solve_upper_in_place(&mut u)?;
        gemm(1.0, &tb.a12, Op::NoTrans, &u, Op::NoTrans, 0.0, &mut v)?;
        rho = v.frobenius_norm();
        if !(rho > f64::MIN_POSITIVE) {
            return Ok(0.0);
        }
        v.scale(1.0 / rho);
        if (rho - prev).abs() <= cfg.rel_tol * rho {
            break;
        }
        prev = rho;
    }
    Ok(rho)
}

fn check_oracle_size(p: usize) -> Result<()> {
    if p > MAX_ORACLE_ORDER {
        return Err(Error::TooLarge {
            p,
            limit: MAX_ORACLE_ORDER,
        });
    }
    Ok(())
}

// Runs two-block sweeps starting from `guess` on `Σ̃_{I_2}`, calling `visit`
// with `Σ̃_{I_2}` after each sweep.
fn two_block_sweeps(
    a: &DenseMatrix,
    i1: &[usize],
    i2: &[usize],
    guess: &DenseMatrix,
    sweeps: usize,
    mut visit: impl FnMut(usize, &DenseMatrix) -> Result<()>,
) -> Result<()> {
    let p = a.rows();
    let mut sigma = DenseMatrix::zeros(p, p);
    scatter(&mut sigma, i2, i2, guess, ScatterMode::Assign)?;
    let op1 = BlockOperator::new(a, i1.to_vec().into(), i2.to_vec().into())?;
    let op2 = BlockOperator::new(a, i2.to_vec().into(), i1.to_vec().into())?;
    for r in 1..=sweeps {
        op1.apply(&mut sigma)?;
        op2.apply(&mut sigma)?;
        visit(r, &gather(&sigma, i2, i2)?)?;
    }
    Ok(())
}

fn check_guess(guess: &DenseMatrix, n2: usize) -> Result<()> {
    if guess.shape() != (n2, n2) {
        return Err(shape_mismatch((n2, n2), guess.shape()));
    }
    if let Some((row, col)) = guess.symmetry_violation(1e-12) {
        return Err(Error::NotSymmetric { row, col });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaCheck {
    /// `‖D − P‖_F / max(‖P‖_F, 1e-6·‖Σ_{I_2}‖_F)`, where `D` is the simulated and
    /// `P` the predicted error.
    pub discrepancy: f64,
    pub direct_error: f64,
    pub predicted_error: f64,
}

/// Compares the simulated error `Σ̃_{I_2}^{(r)} − Σ_{I_2}` with `Bʳ E_0 (Bᵀ)ʳ`.
pub fn lemma_error_recurrence_check(
    a: &DenseMatrix,
    i1: &[usize],
    i2: &[usize],
    guess: &DenseMatrix,
    r: usize,
) -> Result<LemmaCheck> {
    check_oracle_size(a.rows())?;
    let tb = TwoBlock::new(a, i1, i2)?;
    check_guess(guess, i2.len())?;
    let exact = gather(&spd_inverse(a)?, i2, i2)?;
    let e0 = guess.sub(&exact)?;

    let mut direct = e0.clone();
    two_block_sweeps(a, i1, i2, guess, r, |_, s2| {
        direct = s2.sub(&exact)?;
        Ok(())
    })?;

    let b = tb.contraction_matrix()?;
    let mut predicted = e0;
    for _ in 0..r {
        let be = matmul(&b, &predicted)?;
        let mut next = DenseMatrix::zeros(b.rows(), b.rows());
        gemm(1.0, &be, Op::NoTrans, &b, Op::Trans, 0.0, &mut next)?;
        predicted = next;
    }
    let floor = 1e-6 * exact.frobenius_norm();
    let denom = predicted.frobenius_norm().max(floor).max(f64::MIN_POSITIVE);
    Ok(LemmaCheck {
        discrepancy: direct.sub(&predicted)?.frobenius_norm() / denom,
        direct_error: direct.frobenius_norm(),
        predicted_error: predicted.frobenius_norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundStep {
    pub r: usize,
    /// `‖Σ̃_{I_2}^{(r)} − Σ_{I_2}‖₂`
    pub error: f64,
    /// `factor^{2r} · ‖E_0‖₂`
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTrace {
    pub factor: f64,
    pub initial_error: f64,
    pub steps: Vec<BoundStep>,
}

/// Error and its theoretical bound after each of `sweeps` two-block sweeps.
pub fn bound_trace(
    a: &DenseMatrix,
    i1: &[usize],
    i2: &[usize],
    guess: &DenseMatrix,
    sweeps: usize,
) -> Result<BoundTrace> {
    check_oracle_size(a.rows())?;
    check_guess(guess, i2.len())?;
    let factor = contraction_factor(a, i1, i2)?;
    let exact = gather(&spd_inverse(a)?, i2, i2)?;
    let initial_error = two_norm(&guess.sub(&exact)?).value;
    let mut steps = Vec::with_capacity(sweeps);
    two_block_sweeps(a, i1, i2, guess, sweeps, |r, s2| {
        steps.push(BoundStep {
            r,
            error: two_norm(&s2.sub(&exact)?).value,
            bound: factor.powi(2 * r as i32) * initial_error,
        });
        Ok(())
    })?;
    Ok(BoundTrace {
        factor,
        initial_error,
        steps,
    })
}

/// A modelled flop count, held exactly as a whole number of thirds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Flops {
    thirds: u128,
}

impl Flops {
    pub fn from_thirds(thirds: u128) -> Self {
        Self { thirds }
    }

    pub fn thirds(self) -> u128 {
        self.thirds
    }

    pub fn as_f64(self) -> f64 {
        self.thirds as f64 / 3.0
    }
}

impl Add for Flops {
    type Output = Flops;

    fn add(self, rhs: Flops) -> Flops {
        Flops::from_thirds(self.thirds + rhs.thirds)
    }
}

impl Sum for Flops {
    fn sum<I: Iterator<Item = Flops>>(iter: I) -> Flops {
        iter.fold(Flops::default(), Add::add)
    }
}

impl fmt::Display for Flops {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.thirds / 3;
        match self.thirds % 3 {
            0 => write!(f, "{whole}"),
            r => write!(f, "{whole} {r}/3"),
        }
    }
}

impl Serialize for Flops {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

/// Modelled cost of one sweep next to the direct Cholesky-based inverse.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostBreakdown {
    pub k: usize,
    pub m: usize,
    pub h: usize,
    pub per_step_flops: Vec<Flops>,
    pub total_flops: Flops,
    pub direct_flops: Flops,
}

impl CostBreakdown {
    /// Modelled sweep cost over direct cost.
    pub fn ratio(&self) -> f64 {
        self.total_flops.as_f64() / self.direct_flops.as_f64()
    }
}

/// Cost model for a contiguous partition of `p` indices into `k` sets with
/// overlap fraction `f`: sets at either end cost `(m+h)³/3 + 2K²m²(m+h)`,
/// interior sets `(m+2h)³/3 + 2K²m²(m+2h)`, and the direct inverse `(7/3)(Km)³`.
pub fn flop_cost(p: usize, k: usize, overlap_fraction: f64) -> Result<CostBreakdown> {
    let part = Partition::contiguous(p, k, overlap_fraction)?;
    Ok(flop_cost_blocks(k, p / k, part.overlap_depth()))
}

/// The same model from the block parameters directly.
pub fn flop_cost_blocks(k: usize, m: usize, h: usize) -> CostBreakdown {
    let (k128, m128, h128) = (k as u128, m as u128, h as u128);
    let step = |size: u128| Flops::from_thirds(size.pow(3) + 6 * k128 * k128 * m128 * m128 * size);
    let per_step_flops: Vec<Flops> = (0..k)
        .map(|j| {
            if j == 0 || j + 1 == k {
                step(m128 + h128)
            } else {
                step(m128 + 2 * h128)
            }
        })
        .collect();
    let total_flops = per_step_flops.iter().copied().sum();
    CostBreakdown {
        k,
        m,
        h,
        per_step_flops,
        total_flops,
        direct_flops: Flops::from_thirds(7 * (k128 * m128).pow(3)),
    }
}

#[derive(Clone, Debug)]
pub struct NewtonSchultz {
    pub x: DenseMatrix,
    /// Updates applied.
    pub iterations: usize,
    pub converged: bool,
    /// `‖I − AX‖₂` at the last check.
    pub residual: f64,
}

/// Residual beyond which the iteration is treated as divergent.
pub const NEWTON_DIVERGENCE: f64 = 1e8;

/// `X ← X(2I − AX)` until `‖I − AX‖₂ ≤ tol`, divergence, or `max_iters` updates.
pub fn newton_schultz(
    a: &DenseMatrix,
    x0: &DenseMatrix,
    tol: f64,
    max_iters: usize,
) -> Result<NewtonSchultz> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    if x0.shape() != a.shape() {
        return Err(shape_mismatch(a.shape(), x0.shape()));
    }
    let n = a.rows();
    let cfg = PowerConfig::default();
    let mut x = x0.clone();
    let mut iterations = 0;
    loop {
        // r = I − AX
        let mut r = DenseMatrix::identity(n);
        gemm(-1.0, a, Op::NoTrans, &x, Op::NoTrans, 1.0, &mut r)?;
        let residual = two_norm_with(&r, &cfg).value;
        let converged = residual <= tol;
        let diverged = !residual.is_finite() || residual > NEWTON_DIVERGENCE;
        if converged || diverged || iterations == max_iters {
            return Ok(NewtonSchultz {
                x,
                iterations,
                converged,
                residual,
            });
        }
        // X(2I − AX) = X(I + r)
        r.shift_diagonal(1.0);
        x = matmul(&x, &r)?;
        iterations += 1;
    }
}

/// Largest eigenvalue of a symmetric matrix by power iteration.
pub fn largest_eigenvalue(a: &DenseMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    let est = crate::dense::power_iteration(a.rows(), &PowerConfig::default(), |x, y| {
        symv(a, x, y)
    });
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_has_zero_factor() {
        let a = DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(contraction_factor(&a, &[0, 1], &[2, 3]).unwrap(), 0.0);
        assert_eq!(spectral_radius_condition(&a, &[0, 1], &[2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_sets_rejected() {
        let a = DenseMatrix::identity(4);
        assert!(contraction_factor(&a, &[0, 1, 2], &[2, 3]).is_err());
        assert!(contraction_factor(&a, &[0, 1], &[2]).is_err());
    }

    #[test]
    fn cost_model_examples() {
        let c = flop_cost(200, 2, 0.0).unwrap();
        assert_eq!(c.m, 100);
        assert_eq!(c.h, 0);
        // (1/3 + 8) * 2 * 10^6
        assert_eq!(c.total_flops.thirds(), 50_000_000);
        assert!((c.total_flops.as_f64() - 1.666_666_666_7e7).abs() < 1.0);
        assert_eq!(c.per_step_flops.len(), 2);
        assert!(c.total_flops < c.direct_flops);
        let c = flop_cost(400, 4, 0.1).unwrap();
        assert_eq!(c.h, 10);
        assert_eq!(c.per_step_flops[0], c.per_step_flops[3]);
        assert!(c.per_step_flops[1] > c.per_step_flops[0]);
        assert!(flop_cost(10, 2, 0.6).is_err());
    }

    #[test]
    fn flops_display() {
        assert_eq!(Flops::from_thirds(7).to_string(), "2 1/3");
        assert_eq!(Flops::from_thirds(9).to_string(), "3");
    }

    #[test]
    fn newton_examples() {
        let id = DenseMatrix::identity(3);
        let r = newton_schultz(&id, &id, 1e-12, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, id);

        let a = DenseMatrix::from_rows(&[[2.0]]).unwrap();
        let x0 = DenseMatrix::from_rows(&[[0.4]]).unwrap();
        let r = newton_schultz(&a, &x0, 1e-14, 50).unwrap();
        assert!(r.converged);
        assert!((r.x[(0, 0)] - 0.5).abs() < 1e-15);

        // |1 − 2·1.1| > 1: the scalar iteration runs away.
        let bad = DenseMatrix::from_rows(&[[1.1]]).unwrap();
        let r = newton_schultz(&a, &bad, 1e-12, 100).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn oracle_size_limit() {
        let a = DenseMatrix::identity(MAX_ORACLE_ORDER + 2);
        let i1: Vec<usize> = (0..257).collect();
        let i2: Vec<usize> = (257..MAX_ORACLE_ORDER + 2).collect();
        let g = DenseMatrix::identity(i2.len());
        assert!(matches!(
            lemma_error_recurrence_check(&a, &i1, &i2, &g, 1),
            Err(Error::TooLarge { .. })
        ));
    }
}
