//! Starting values for `Σ̃` on the complement of the first set.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dense::{cholesky, gather, gemm, ldlt, spd_inverse, DenseMatrix, Op};
use crate::error::{Error, Result};

pub const DEFAULT_MC_SAMPLES: usize = 100;
pub const DEFAULT_MC_SEED: u64 = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialGuess {
    #[default]
    Identity,
    LocalInverse,
    MonteCarlo { n_samples: usize, seed: u64 },
    Takahashi,
}

impl fmt::Display for InitialGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGuess::Identity => f.write_str("identity"),
            InitialGuess::LocalInverse => f.write_str("local"),
            InitialGuess::MonteCarlo { n_samples, seed } => write!(f, "mc:{n_samples}:{seed}"),
            InitialGuess::Takahashi => f.write_str("takahashi"),
        }
    }
}

impl FromStr for InitialGuess {
    type Err = Error;

    /// Accepts `identity`, `local`, `takahashi`, `mc`, `mc:N` and `mc:N:SEED`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognised initial guess {s:?}"));
        let lower = s.trim().to_ascii_lowercase();
        let mut parts = lower.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match (head, rest.as_slice()) {
            ("identity", []) => Ok(InitialGuess::Identity),
            ("local", []) => Ok(InitialGuess::LocalInverse),
            ("takahashi", []) => Ok(InitialGuess::Takahashi),
            ("mc", tail) if tail.len() <= 2 => {
                let n_samples = match tail.first() {
                    Some(t) => t.parse().map_err(|_| bad())?,
                    None => DEFAULT_MC_SAMPLES,
                };
                let seed = match tail.get(1) {
                    Some(t) => t.parse().map_err(|_| bad())?,
                    None => DEFAULT_MC_SEED,
                };
                if n_samples == 0 {
                    return Err(Error::InvalidConfig("mc needs at least one sample".into()));
                }
                Ok(InitialGuess::MonteCarlo { n_samples, seed })
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for InitialGuess {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InitialGuess> for String {
    fn from(g: InitialGuess) -> String {
        g.to_string()
    }
}

pub fn initial_guess(a: &DenseMatrix, comp: &[usize], guess: &InitialGuess) -> Result<DenseMatrix> {
    match *guess {
        InitialGuess::Identity => Ok(initial_guess_identity(comp.len())),
        InitialGuess::LocalInverse => initial_guess_local_inverse(a, comp),
        InitialGuess::MonteCarlo { n_samples, seed } => {
            initial_guess_monte_carlo(a, comp, n_samples, seed)
        }
        InitialGuess::Takahashi => initial_guess_takahashi(a, comp),
    }
}

pub fn initial_guess_identity(comp_size: usize) -> DenseMatrix {
    DenseMatrix::identity(comp_size)
}

/// `(A_{I^c})⁻¹`.
pub fn initial_guess_local_inverse(a: &DenseMatrix, comp: &[usize]) -> Result<DenseMatrix> {
    spd_inverse(&gather(a, comp, comp)?)
}

/// Sample covariance of `z ~ N(0, A⁻¹)` restricted to `comp`, drawn by solving
/// `Lᵀ z = w` with `w ~ N(0, I)` and `A = L Lᵀ`.
pub fn initial_guess_monte_carlo(
    a: &DenseMatrix,
    comp: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<DenseMatrix> {
    if n_samples == 0 {
        return Err(Error::InvalidConfig("mc needs at least one sample".into()));
    }
    let f = cholesky(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DenseMatrix::zeros(a.rows(), n_samples);
    z.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = StandardNormal.sample(&mut rng));
    f.solve_upper_in_place(&mut z)?;
    let all: Vec<usize> = (0..n_samples).collect();
    let zc = gather(&z, comp, &all)?;
    let mut est = DenseMatrix::zeros(comp.len(), comp.len());
    gemm(
        1.0 / n_samples as f64,
        &zc,
        Op::NoTrans,
        &zc,
        Op::Trans,
        0.0,
        &mut est,
    )?;
    est.symmetrize();
    Ok(est)
}

/// `Σ_{I^c}` from the Takahashi recurrence on a dense `LDLᵀ` factorization of `A`
/// reordered so that `comp` occupies the trailing rows and columns:
/// `h_ij = δ_ij / d_i − Σ_{k>i} l_ki h_kj`, evaluated only inside that corner.
pub fn initial_guess_takahashi(a: &DenseMatrix, comp: &[usize]) -> Result<DenseMatrix> {
    let p = a.rows();
    let c = comp.len();
    let mut in_comp = vec![false; p];
    for &i in comp {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, bound: p });
        }
        in_comp[i] = true;
    }
    let mut perm: Vec<usize> = (0..p).filter(|&i| !in_comp[i]).collect();
    perm.extend_from_slice(comp);
    let ldl = ldlt(&gather(a, &perm, &perm)?)?;

    let q = p - c;
    let mut h = DenseMatrix::zeros(c, c);
    let mut row = vec![0.0; c];
    for li in (0..c).rev() {
        let i = q + li;
        row.iter_mut().for_each(|v| *v = 0.0);
        for lk in li + 1..c {
            let coef = ldl.l[(q + lk, i)];
            if coef != 0.0 {
                let hk = &h.row(lk)[li + 1..];
                for (r, &v) in row[li + 1..].iter_mut().zip(hk) {
                    *r -= coef * v;
                }
            }
        }
        let mut hii = 1.0 / ldl.d[i];
        for lk in li + 1..c {
            hii -= ldl.l[(q + lk, i)] * row[lk];
        }
        h[(li, li)] = hii;
        for lj in li + 1..c {
            h[(li, lj)] = row[lj];
            h[(lj, li)] = row[lj];
        }
    }
    Ok(h)
}
