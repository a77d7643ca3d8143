//! The IBMI iteration.
//!
//! For an index set `I` with complement `c`, one block update replaces the
//! blocks of `Σ̃` touching `I` with
//!
//! ```text
//! W      = A_I⁻¹ A_{I,c}
//! Σ̃_I   = A_I⁻¹ + W Σ̃_c Wᵀ
//! Σ̃_{I,c} = −W Σ̃_c
//! ```
//!
//! and leaves `Σ̃_c` alone. A sweep applies the update for every set in order;
//! after each sweep the (1,2) block of `Σ̃A` for the last set is measured.

mod guess;

use std::time::Instant;

pub use guess::{
    initial_guess, initial_guess_identity, initial_guess_local_inverse,
    initial_guess_monte_carlo, initial_guess_takahashi, InitialGuess, DEFAULT_MC_SAMPLES,
    DEFAULT_MC_SEED,
};

use crate::dense::{
    gather, gemm, scatter, scatter_transposed, spd_inverse, two_norm_with, DenseMatrix,
    NormEstimate, Op, PowerConfig, ScatterMode,
};
use crate::error::{shape_mismatch, Error, Result};
use crate::partition::{IndexList, Partition};

#[derive(Clone, Debug, PartialEq)]
pub struct IbmiConfig {
    pub tol: f64,
    pub max_iterations: usize,
    pub initial_guess: InitialGuess,
    pub norm: PowerConfig,
}

impl Default for IbmiConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 500,
            initial_guess: InitialGuess::Identity,
            norm: PowerConfig::default(),
        }
    }
}

impl IbmiConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if let InitialGuess::MonteCarlo { n_samples: 0, .. } = self.initial_guess {
            return Err(Error::InvalidConfig("mc needs at least one sample".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Number of completed sweeps.
    pub iterations: usize,
    pub converged: bool,
    /// Error estimate after each sweep.
    pub error_trace: Vec<f64>,
    /// Seconds spent in each sweep, estimate included.
    pub wall_times: Vec<f64>,
    /// Whole solve, including factorizations and the initial guess.
    pub total_seconds: f64,
    /// Sweeps whose norm estimate hit the power-iteration cap.
    pub unconverged_norms: usize,
    pub result: DenseMatrix,
}

/// Per-set data that does not change between sweeps: `A_I⁻¹` and `W`.
#[derive(Clone, Debug)]
pub struct BlockOperator {
    set: IndexList,
    comp: IndexList,
    a_inv: DenseMatrix,
    w: DenseMatrix,
}

fn check_split(p: usize, set: &[usize], comp: &[usize]) -> Result<()> {
    if set.len() + comp.len() != p {
        return Err(Error::InvalidPartition(format!(
            "set ({}) and complement ({}) do not split {p} indices",
            set.len(),
            comp.len()
        )));
    }
    let mut seen = vec![false; p];
    for &i in set.iter().chain(comp) {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, bound: p });
        }
        if seen[i] {
            return Err(Error::InvalidPartition(format!(
                "index {i} appears twice in set and complement"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

fn check_square_pair(a: &DenseMatrix, sigma: &DenseMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
    }
    if sigma.shape() != a.shape() {
        return Err(shape_mismatch(a.shape(), sigma.shape()));
    }
    Ok(())
}

impl BlockOperator {
    pub fn new(a: &DenseMatrix, set: IndexList, comp: IndexList) -> Result<Self> {
        if !a.is_square() {
            return Err(shape_mismatch((a.rows(), a.rows()), a.shape()));
        }
        check_split(a.rows(), &set, &comp)?;
        let a_inv = spd_inverse(&gather(a, &set, &set)?)?;
        let a_ic = gather(a, &set, &comp)?;
        let mut w = DenseMatrix::zeros(set.len(), comp.len());
        gemm(1.0, &a_inv, Op::NoTrans, &a_ic, Op::NoTrans, 0.0, &mut w)?;
        Ok(Self {
            set,
            comp,
            a_inv,
            w,
        })
    }

    pub fn set(&self) -> &IndexList {
        &self.set
    }

    pub fn comp(&self) -> &IndexList {
        &self.comp
    }

    /// Applies the update in place. `Σ̃_c` is copied out before anything is written.
    pub fn apply(&self, sigma: &mut DenseMatrix) -> Result<()> {
        let n = self.set.len();
        let c = self.comp.len();
        if sigma.shape() != (n + c, n + c) {
            return Err(shape_mismatch((n + c, n + c), sigma.shape()));
        }
        let sc = gather(sigma, &self.comp, &self.comp)?;
        let mut m = DenseMatrix::zeros(n, c);
        gemm(1.0, &self.w, Op::NoTrans, &sc, Op::NoTrans, 0.0, &mut m)?;
        drop(sc);
        let mut top = self.a_inv.clone();
        gemm(1.0, &m, Op::NoTrans, &self.w, Op::Trans, 1.0, &mut top)?;
        top.symmetrize();
        scatter(sigma, &self.set, &self.set, &top, ScatterMode::Assign)?;
        m.scale(-1.0);
        scatter(sigma, &self.set, &self.comp, &m, ScatterMode::Assign)?;
        scatter_transposed(sigma, &self.comp, &self.set, &m, 1.0)?;
        Ok(())
    }
}

/// One update of `sigma` for `set` (see the module docs).
pub fn block_update(
    a: &DenseMatrix,
    sigma: &mut DenseMatrix,
    set: &[usize],
    comp: &[usize],
) -> Result<()> {
    check_square_pair(a, sigma)?;
    BlockOperator::new(a, set.to_vec().into(), comp.to_vec().into())?.apply(sigma)
}

/// `‖Σ̃_I A_{I,c} + Σ̃_{I,c} A_c‖₂`, the (1,2) block of `Σ̃A`.
pub fn error_estimate(
    a: &DenseMatrix,
    sigma: &DenseMatrix,
    set: &[usize],
    comp: &[usize],
) -> Result<NormEstimate> {
    error_estimate_with(a, sigma, set, comp, &PowerConfig::default())
}

pub fn error_estimate_with(
    a: &DenseMatrix,
    sigma: &DenseMatrix,
    set: &[usize],
    comp: &[usize],
    cfg: &PowerConfig,
) -> Result<NormEstimate> {
    check_square_pair(a, sigma)?;
    check_split(a.rows(), set, comp)?;
    ErrorProbe::new(a, set, comp)?.estimate(sigma, cfg)
}

// Cached `A_{I,c}` and `A_c` for the set whose error is tracked.
struct ErrorProbe {
    set: Vec<usize>,
    comp: Vec<usize>,
    a_ic: DenseMatrix,
    a_c: DenseMatrix,
}

impl ErrorProbe {
    fn new(a: &DenseMatrix, set: &[usize], comp: &[usize]) -> Result<Self> {
        Ok(Self {
            set: set.to_vec(),
            comp: comp.to_vec(),
            a_ic: gather(a, set, comp)?,
            a_c: gather(a, comp, comp)?,
        })
    }

    fn estimate(&self, sigma: &DenseMatrix, cfg: &PowerConfig) -> Result<NormEstimate> {
        let s_i = gather(sigma, &self.set, &self.set)?;
        let s_ic = gather(sigma, &self.set, &self.comp)?;
        let mut e = DenseMatrix::zeros(self.set.len(), self.comp.len());
        gemm(1.0, &s_i, Op::NoTrans, &self.a_ic, Op::NoTrans, 0.0, &mut e)?;
        gemm(1.0, &s_ic, Op::NoTrans, &self.a_c, Op::NoTrans, 1.0, &mut e)?;
        Ok(two_norm_with(&e, cfg))
    }
}

/// Runs sweeps until the error estimate after a sweep is at most `cfg.tol` or
/// `cfg.max_iterations` sweeps have been done. Hitting the cap is reported
/// through `converged = false`, not as an error. A non-finite estimate also
/// ends the run unconverged.
pub fn solve(a: &DenseMatrix, part: &Partition, cfg: &IbmiConfig) -> Result<SolveReport> {
    let start = Instant::now();
    cfg.validate()?;
    part.validate()?;
    if !a.is_square() || a.rows() != part.p() {
        return Err(shape_mismatch((part.p(), part.p()), a.shape()));
    }
    let p = a.rows();
    let k = part.k();
    let comps: Vec<IndexList> = (0..k).map(|j| part.complement(j)).collect();

    let mut sigma = DenseMatrix::zeros(p, p);
    let guess = initial_guess(a, &comps[0], &cfg.initial_guess)?;
    scatter(&mut sigma, &comps[0], &comps[0], &guess, ScatterMode::Assign)?;
    drop(guess);

    let ops = part
        .sets()
        .iter()
        .zip(&comps)
        .map(|(s, c)| BlockOperator::new(a, s.clone(), c.clone()))
        .collect::<Result<Vec<_>>>()?;
    let probe = ErrorProbe::new(a, part.set(k - 1), &comps[k - 1])?;

    let mut error_trace = Vec::new();
    let mut wall_times = Vec::new();
    let mut unconverged_norms = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let t = Instant::now();
        for op in &ops {
            op.apply(&mut sigma)?;
        }
        let est = probe.estimate(&sigma, &cfg.norm)?;
        wall_times.push(t.elapsed().as_secs_f64());
        error_trace.push(est.value);
        if !est.converged {
            unconverged_norms += 1;
        }
        if !est.value.is_finite() {
            break;
        }
        if est.value <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveReport {
        iterations: error_trace.len(),
        converged,
        error_trace,
        wall_times,
        total_seconds: start.elapsed().as_secs_f64(),
        unconverged_norms,
        result: sigma,
    })
}
