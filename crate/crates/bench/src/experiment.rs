//! Experiment specs, the runner, and CSV output.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use ibmi_core::dense::{condition_number_2, spd_inverse, two_norm};
use ibmi_core::kernels::{generate, KernelSpec};
use ibmi_core::partition::{Partition, SetOrdering};
use ibmi_core::solver::{solve, IbmiConfig, InitialGuess};
use ibmi_core::DenseMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// 4 GiB.
pub const DEFAULT_MEMORY_BUDGET: u64 = 4 << 30;

// Rough peak footprints in units of p² doubles: A, Σ̃, the per-set inverses
// and W blocks, plus gather temporaries.
const SOLVE_WORDS: u64 = 6;
// Exact inverse, its Cholesky factor and a difference matrix.
const DIRECT_WORDS: u64 = 3;

fn default_dim() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-8
}

fn default_repeats() -> usize {
    1
}

fn default_max_iterations() -> usize {
    500
}

fn default_ordering() -> SetOrdering {
    SetOrdering::Contiguous
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kernel: KernelSpec,
    #[serde(default = "default_dim")]
    pub data_dim: usize,
    pub sizes: Vec<usize>,
    /// `(K, overlap fraction)` cells.
    pub partition_grid: Vec<(usize, f64)>,
    #[serde(default)]
    pub guess: InitialGuess,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_ordering")]
    pub ordering: SetOrdering,
    /// Also time `spd_inverse` and record `‖Σ̃ − Σ‖₂`.
    #[serde(default)]
    pub direct: bool,
    /// Also record the 2-norm condition number of `A`.
    #[serde(default)]
    pub cond: bool,
}

impl ExperimentSpec {
    pub fn new(name: &str, kernel: KernelSpec, sizes: Vec<usize>, grid: Vec<(usize, f64)>) -> Self {
        Self {
            name: name.to_string(),
            kernel,
            data_dim: 1,
            sizes,
            partition_grid: grid,
            guess: InitialGuess::Identity,
            tol: default_tol(),
            repeats: 1,
            max_iterations: default_max_iterations(),
            ordering: SetOrdering::Contiguous,
            direct: false,
            cond: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::InvalidSpec(format!("{}: {msg}", self.name)));
        if self.sizes.is_empty() {
            return bad("sizes is empty".into());
        }
        if self.partition_grid.is_empty() {
            return bad("partition_grid is empty".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.data_dim != 1 && self.data_dim != 2 {
            return bad(format!("data_dim must be 1 or 2, got {}", self.data_dim));
        }
        match self.ordering {
            SetOrdering::Contiguous => {}
            SetOrdering::RedBlack => {
                if self.partition_grid.iter().any(|&(k, f)| k != 2 || f != 0.0) {
                    return bad("red-black ordering takes only the cell (2, 0)".into());
                }
            }
            SetOrdering::Custom => return bad("custom ordering is not available in specs".into()),
        }
        self.kernel.validate()?;
        self.config().validate()?;
        Ok(())
    }

    fn config(&self) -> IbmiConfig {
        IbmiConfig {
            tol: self.tol,
            max_iterations: self.max_iterations,
            initial_guess: self.guess,
            ..IbmiConfig::default()
        }
    }

    fn partition(&self, p: usize, k: usize, f: f64) -> ibmi_core::Result<Partition> {
        match self.ordering {
            SetOrdering::RedBlack => Partition::red_black(p),
            _ => Partition::contiguous(p, k, f),
        }
    }
}

/// Reads one spec or an array of specs from a JSON file.
pub fn load_specs(path: impl AsRef<Path>) -> Result<Vec<ExperimentSpec>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(Box<ExperimentSpec>),
        Many(Vec<ExperimentSpec>),
    }
    let text = std::fs::read_to_string(path)?;
    let specs = match serde_json::from_str(&text)? {
        OneOrMany::One(s) => vec![*s],
        OneOrMany::Many(v) => v,
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// Not attempted; `note` says why.
    Skipped,
    /// The solve or a baseline returned an error, kept in `note`.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub name: String,
    pub p: usize,
    pub kernel: String,
    pub data_dim: usize,
    pub k: usize,
    pub overlap: f64,
    pub ordering: String,
    pub guess: String,
    pub repeat: usize,
    pub iterations: Option<usize>,
    pub converged: bool,
    /// Last per-sweep error estimate.
    pub error_estimate: Option<f64>,
    /// `‖Σ̃ − Σ‖₂` against `spd_inverse`.
    pub final_error: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub direct_seconds: Option<f64>,
    pub cond_estimate: Option<f64>,
    pub status: RowStatus,
    pub note: String,
}

impl ExperimentRow {
    fn blank(spec: &ExperimentSpec, p: usize, k: usize, f: f64, repeat: usize) -> Self {
        Self {
            name: spec.name.clone(),
            p,
            kernel: spec.kernel.label(),
            data_dim: spec.data_dim,
            k,
            overlap: f,
            ordering: spec.ordering.to_string(),
            guess: spec.guess.to_string(),
            repeat,
            iterations: None,
            converged: false,
            error_estimate: None,
            final_error: None,
            solve_seconds: None,
            direct_seconds: None,
            cond_estimate: None,
            status: RowStatus::Ok,
            note: String::new(),
        }
    }

    fn with_status(mut self, status: RowStatus, note: impl Into<String>) -> Self {
        self.status = status;
        self.note = note.into();
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub memory_budget: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
        }
    }
}

fn footprint(p: usize, words: u64) -> u64 {
    words.saturating_mul((p as u64).saturating_pow(2)).saturating_mul(8)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>> {
    run_experiment_with(spec, &RunOptions::default(), |_| {})
}

/// Runs every `(p, K, f, repeat)` cell of `spec`, calling `progress` as each
/// row is finished. Sizes over the memory budget give `Skipped` rows, and
/// per-cell errors give `Failed` rows; only a spec in which no size fits at
/// all is an error.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    opts: &RunOptions,
    mut progress: impl FnMut(&ExperimentRow),
) -> Result<Vec<ExperimentRow>> {
    spec.validate()?;
    let smallest = *spec.sizes.iter().min().expect("validated");
    let needed = footprint(smallest, SOLVE_WORDS);
    if needed > opts.memory_budget {
        return Err(BenchError::OutOfMemoryBudget {
            p: smallest,
            needed,
            budget: opts.memory_budget,
        });
    }

    let mut rows = Vec::new();
    let mut push = |row: ExperimentRow, rows: &mut Vec<ExperimentRow>| {
        progress(&row);
        rows.push(row);
    };
    for &p in &spec.sizes {
        let cells = || {
            spec.partition_grid
                .iter()
                .flat_map(move |&(k, f)| (0..spec.repeats).map(move |r| (k, f, r)))
        };
        let needed = footprint(p, SOLVE_WORDS);
        if needed > opts.memory_budget {
            let note = format!("needs about {needed} bytes, budget {}", opts.memory_budget);
            for (k, f, r) in cells() {
                push(ExperimentRow::blank(spec, p, k, f, r).with_status(RowStatus::Skipped, &note), &mut rows);
            }
            continue;
        }
        let a = match generate(&spec.kernel, spec.data_dim, p) {
            Ok(a) => a,
            Err(e) => {
                for (k, f, r) in cells() {
                    push(ExperimentRow::blank(spec, p, k, f, r).with_status(RowStatus::Failed, e.to_string()), &mut rows);
                }
                continue;
            }
        };

        let cond = if spec.cond {
            condition_number_2(&a).map(|c| c.value).map_err(|e| e.to_string())
        } else {
            Err(String::new())
        };
        let mut direct_note = String::new();
        let direct = if !spec.direct {
            None
        } else if footprint(p, SOLVE_WORDS + DIRECT_WORDS) > opts.memory_budget {
            direct_note = "direct inverse skipped: over memory budget".into();
            None
        } else {
            let t = Instant::now();
            match spd_inverse(&a) {
                Ok(inv) => Some((inv, t.elapsed().as_secs_f64())),
                Err(e) => {
                    direct_note = format!("direct inverse failed: {e}");
                    None
                }
            }
        };

        for (k, f, r) in cells() {
            let mut row = ExperimentRow::blank(spec, p, k, f, r);
            row.cond_estimate = cond.as_ref().ok().copied();
            if let Err(e) = &cond {
                if !e.is_empty() {
                    row.note = format!("cond failed: {e}");
                }
            }
            if !direct_note.is_empty() {
                row.note = direct_note.clone();
            }
            let row = match spec.partition(p, k, f) {
                Ok(part) => measure(&a, &part, &spec.config(), direct.as_ref(), row),
                Err(e) => row.with_status(RowStatus::Failed, e.to_string()),
            };
            push(row, &mut rows);
        }
    }
    Ok(rows)
}

// Times one solve and fills in the solver columns of `row`.
fn measure(
    a: &DenseMatrix,
    part: &Partition,
    cfg: &IbmiConfig,
    direct: Option<&(DenseMatrix, f64)>,
    mut row: ExperimentRow,
) -> ExperimentRow {
    let t = Instant::now();
    let report = match solve(a, part, cfg) {
        Ok(r) => r,
        Err(e) => return row.with_status(RowStatus::Failed, e.to_string()),
    };
    row.solve_seconds = Some(t.elapsed().as_secs_f64());
    row.iterations = Some(report.iterations);
    row.converged = report.converged;
    row.error_estimate = report.error_trace.last().copied();
    if let Some((inv, secs)) = direct {
        row.direct_seconds = Some(*secs);
        match report.result.sub(inv) {
            Ok(diff) => row.final_error = Some(two_norm(&diff).value),
            Err(e) => return row.with_status(RowStatus::Failed, e.to_string()),
        }
    }
    row
}

/// One row with the IBMI solve and `spd_inverse` both timed, and `‖Σ̃ − Σ‖₂`.
pub fn compare_direct(a: &DenseMatrix, part: &Partition, cfg: &IbmiConfig) -> Result<ExperimentRow> {
    let t = Instant::now();
    let inv = spd_inverse(a)?;
    let direct_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let report = solve(a, part, cfg)?;
    let solve_seconds = t.elapsed().as_secs_f64();
    let final_error = two_norm(&report.result.sub(&inv)?).value;
    Ok(ExperimentRow {
        name: "compare".into(),
        p: a.rows(),
        kernel: "input".into(),
        data_dim: 0,
        k: part.k(),
        overlap: part.overlap_fraction(),
        ordering: part.ordering().to_string(),
        guess: cfg.initial_guess.to_string(),
        repeat: 0,
        iterations: Some(report.iterations),
        converged: report.converged,
        error_estimate: report.error_trace.last().copied(),
        final_error: Some(final_error),
        solve_seconds: Some(solve_seconds),
        direct_seconds: Some(direct_seconds),
        cond_estimate: None,
        status: RowStatus::Ok,
        note: String::new(),
    })
}

/// Header plus one line per row, in the order given.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::EmptyRows);
    }
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ExperimentRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(BenchError::EmptyRows);
    }
    write_csv(rows, File::create(path)?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRow>> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    r.deserialize().map(|row| row.map_err(BenchError::from)).collect()
}
