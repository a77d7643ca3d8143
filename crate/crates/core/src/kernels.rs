//! Covariance kernels evaluated on regular 1D and 2D grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_SIGMA: f64 = 0.5;
pub const DEFAULT_TAU: f64 = 3.0;
/// Fixed length scale of the exponential kernel.
pub const EXP_SCALE: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Exp,
    Rbf,
    Iquad,
    #[serde(alias = "m32")]
    Matern32,
    #[serde(alias = "m52")]
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Exp,
        KernelFamily::Rbf,
        KernelFamily::Iquad,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Exp => "exp",
            KernelFamily::Rbf => "rbf",
            KernelFamily::Iquad => "iquad",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exp" => Ok(KernelFamily::Exp),
            "rbf" => Ok(KernelFamily::Rbf),
            "iquad" => Ok(KernelFamily::Iquad),
            "matern32" | "m32" => Ok(KernelFamily::Matern32),
            "matern52" | "m52" => Ok(KernelFamily::Matern52),
            other => Err(Error::InvalidHyperparameter(format!(
                "unknown kernel family {other:?}"
            ))),
        }
    }
}

fn default_sigma() -> f64 {
    DEFAULT_SIGMA
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

/// Kernel family plus its length scales. `sigma` is read only by RBF and `tau`
/// only by the two Matérn kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily) -> Self {
        Self {
            family,
            sigma: DEFAULT_SIGMA,
            tau: DEFAULT_TAU,
        }
    }

    pub fn exp() -> Self {
        Self::new(KernelFamily::Exp)
    }

    pub fn iquad() -> Self {
        Self::new(KernelFamily::Iquad)
    }

    pub fn rbf(sigma: f64) -> Self {
        Self {
            sigma,
            ..Self::new(KernelFamily::Rbf)
        }
    }

    pub fn matern32(tau: f64) -> Self {
        Self {
            tau,
            ..Self::new(KernelFamily::Matern32)
        }
    }

    pub fn matern52(tau: f64) -> Self {
        Self {
            tau,
            ..Self::new(KernelFamily::Matern52)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidHyperparameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self.family {
            KernelFamily::Rbf => check("sigma", self.sigma),
            KernelFamily::Matern32 | KernelFamily::Matern52 => check("tau", self.tau),
            KernelFamily::Exp | KernelFamily::Iquad => Ok(()),
        }
    }

    /// Covariance at Euclidean distance `d`.
    pub fn eval(&self, d: f64) -> f64 {
        match self.family {
            KernelFamily::Exp => (-d / EXP_SCALE).exp(),
            KernelFamily::Rbf => (-(d * d) / (2.0 * self.sigma * self.sigma)).exp(),
            KernelFamily::Iquad => 1.0 / (1.0 + d * d).sqrt(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * d / self.tau;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * d / self.tau;
                let q = 5.0 * d * d / (3.0 * self.tau * self.tau);
                (1.0 + s + q) * (-s).exp()
            }
        }
    }

    /// Short label such as `rbf(sigma=0.3)` or `exp`.
    pub fn label(&self) -> String {
        match self.family {
            KernelFamily::Rbf => format!("rbf(sigma={})", self.sigma),
            KernelFamily::Matern32 | KernelFamily::Matern52 => {
                format!("{}(tau={})", self.family, self.tau)
            }
            _ => self.family.to_string(),
        }
    }
}

/// Points in one or two dimensions, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// `coords` holds `dim` values per point. Points must be pairwise distinct.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidConfig(format!("point dimension {dim} not in {{1, 2}}")));
        }
        if !coords.len().is_multiple_of(dim) || coords.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "{} coordinates do not form {dim}-dimensional points",
                coords.len()
            )));
        }
        let mut sorted: Vec<&[f64]> = coords.chunks_exact(dim).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("points are not distinct".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.point(i), self.point(j));
        if self.dim == 1 {
            (a[0] - b[0]).abs()
        } else {
            let dx = a[0] - b[0];
            let dy = a[1] - b[1];
            (dx * dx + dy * dy).sqrt()
        }
    }
}

fn axis(n: usize, max: f64) -> Vec<f64> {
    let step = max / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * step).collect();
    v[n - 1] = max;
    v
}

/// `p` equally spaced points from 0 to `p^0.9`, endpoints included.
pub fn grid_1d(p: usize) -> Result<PointSet> {
    if p < 2 {
        return Err(Error::InvalidConfig(format!("grid_1d needs p >= 2, got {p}")));
    }
    Ok(PointSet {
        dim: 1,
        coords: axis(p, (p as f64).powf(0.9)),
    })
}

/// `√p × √p` grid with axis values from 0 to `p^0.45`, first coordinate outer.
pub fn grid_2d(p: usize) -> Result<PointSet> {
    let s = (p as f64).sqrt().round() as usize;
    if s * s != p {
        return Err(Error::NotPerfectSquare(p));
    }
    if s < 2 {
        return Err(Error::InvalidConfig(format!("grid_2d needs p >= 4, got {p}")));
    }
    let ax = axis(s, (p as f64).powf(0.45));
    let mut coords = Vec::with_capacity(2 * p);
    for &x in &ax {
        for &y in &ax {
            coords.push(x);
            coords.push(y);
        }
    }
    Ok(PointSet { dim: 2, coords })
}

pub fn grid(dim: usize, p: usize) -> Result<PointSet> {
    match dim {
        1 => grid_1d(p),
        2 => grid_2d(p),
        _ => Err(Error::InvalidConfig(format!("grid dimension {dim} not in {{1, 2}}"))),
    }
}

/// `A[i][j] = k(‖x_i − x_j‖)`. The lower triangle is evaluated and mirrored, so
/// the result is exactly symmetric.
pub fn kernel_matrix(spec: &KernelSpec, pts: &PointSet) -> Result<DenseMatrix> {
    spec.validate()?;
    if pts.is_empty() {
        return Err(Error::InvalidConfig("empty point set".into()));
    }
    let p = pts.len();
    let mut a = DenseMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let v = spec.eval(pts.distance(i, j));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    Ok(a)
}

/// Kernel matrix on the standard `dim`-dimensional grid of `p` points.
pub fn generate(spec: &KernelSpec, dim: usize, p: usize) -> Result<DenseMatrix> {
    kernel_matrix(spec, &grid(dim, p)?)
}
