use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cholesky::{cholesky, dot};
use super::{gemm, DenseMatrix, Op};
use crate::error::{shape_mismatch, Result};

/// Controls for power and inverse iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerConfig {
    /// Stop when the Rayleigh quotient changes by at most this fraction.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Seed for the restart vector used when the all-ones start vector stagnates.
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            max_iterations: 5000,
            seed: 0x5eed,
        }
    }
}

/// Result of an iterative estimate. When `converged` is false, `value` is the
/// last iterate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
pub(crate) fn power_iteration(
    n: usize,
    cfg: &PowerConfig,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> NormEstimate {
    if n == 0 {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut restarted = false;
    let mut prev: Option<f64> = None;
    let mut lambda = 0.0;
    for it in 1..=cfg.max_iterations {
        apply(&v, &mut w);
        lambda = dot(&v, &w);
        let nw = dot(&w, &w).sqrt();
        if !(nw > f64::MIN_POSITIVE) {
            if !nw.is_finite() {
                return NormEstimate {
                    value: f64::NAN,
                    iterations: it,
                    converged: false,
                };
            }
            if restarted {
                // Annihilated from two independent starts: the operator is zero.
                return NormEstimate {
                    value: 0.0,
                    iterations: it,
                    converged: true,
                };
            }
            restarted = true;
            prev = None;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            v.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
            let nv = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            continue;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if let Some(p) = prev {
            if (lambda - p).abs() <= cfg.rel_tol * lambda.abs() {
                return NormEstimate {
                    value: lambda,
                    iterations: it,
                    converged: true,
                };
            }
        }
        prev = Some(lambda);
    }
    NormEstimate {
        value: lambda,
        iterations: cfg.max_iterations,
        converged: false,
    }
}

pub(crate) fn symv(g: &DenseMatrix, x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = dot(g.row(i), x);
    }
}

/// Spectral norm estimate with default settings.
pub fn two_norm(a: &DenseMatrix) -> NormEstimate {
    two_norm_with(a, &PowerConfig::default())
}

/// Spectral norm by power iteration on the smaller Gram matrix (`aᵀa` or `aaᵀ`).
pub fn two_norm_with(a: &DenseMatrix, cfg: &PowerConfig) -> NormEstimate {
    if a.is_empty() {
        return NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let (op_l, op_r, k) = if a.rows() <= a.cols() {
        (Op::NoTrans, Op::Trans, a.rows())
    } else {
        (Op::Trans, Op::NoTrans, a.cols())
    };
    let mut g = DenseMatrix::zeros(k, k);
    gemm(1.0, a, op_l, a, op_r, 0.0, &mut g).expect("gram shape");
    let est = power_iteration(k, cfg, |x, y| symv(&g, x, y));
    NormEstimate {
        value: est.value.max(0.0).sqrt(),
        ..est
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionEstimate {
    pub value: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub converged: bool,
}

/// 2-norm condition number of an SPD matrix: power iteration for the largest
/// eigenvalue, inverse iteration through Cholesky solves for the smallest.
pub fn condition_number_2(a: &DenseMatrix) -> Result<ConditionEstimate> {
    condition_number_2_with(a, &PowerConfig::default())
}

pub fn condition_number_2_with(a: &DenseMatrix, cfg: &PowerConfig) -> Result<ConditionEstimate> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    let f = cholesky(a)?;
    let n = a.rows();
    let hi = power_iteration(n, cfg, |x, y| symv(a, x, y));
    let mut rhs = DenseMatrix::zeros(n, 1);
    let lo = power_iteration(n, cfg, |x, y| {
        rhs.as_mut_slice().copy_from_slice(x);
        f.solve_lower_in_place(&mut rhs).expect("factor shape");
        f.solve_upper_in_place(&mut rhs).expect("factor shape");
        y.copy_from_slice(rhs.as_slice());
    });
    let lambda_min = 1.0 / lo.value;
    Ok(ConditionEstimate {
        value: hi.value * lo.value,
        lambda_max: hi.value,
        lambda_min,
        converged: hi.converged && lo.converged,
    })
}
