use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ibmi_bench::{
    compare_direct, emit_csv, load_specs, run_experiment_with, BenchError, RowStatus, RunOptions,
};
use ibmi_core::analysis::{bound_trace, contraction_factor, flop_cost, newton_schultz, spectral_radius_condition};
use ibmi_core::dense::{io, spd_inverse, two_norm};
use ibmi_core::kernels::{generate, KernelFamily, KernelSpec, DEFAULT_SIGMA, DEFAULT_TAU};
use ibmi_core::partition::{Partition, SetOrdering};
use ibmi_core::solver::{initial_guess_identity, solve, IbmiConfig, InitialGuess};
use ibmi_core::DenseMatrix;
use serde_json::json;

/// Iterative block matrix inversion for SPD matrices.
#[derive(Parser)]
#[command(name = "ibmi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a kernel matrix on the 1D or 2D grid.
    Gen(GenArgs),
    /// Invert a matrix file with IBMI.
    Invert(InvertArgs),
    /// Convergence quantities for a two-block split, and the cost model.
    Analyze(AnalyzeArgs),
    /// Run experiment specs and write CSV rows.
    Bench(BenchArgs),
    /// Time IBMI against the direct inverse (and optionally Newton–Schultz).
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "rbf")]
    kernel: KernelFamily,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(short, long)]
    p: usize,
    /// `.csv` for text, anything else for the binary format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    #[arg(long, default_value = "contiguous")]
    ordering: SetOrdering,
    /// JSON file `{"p": .., "sets": [[..], ..]}`; overrides blocks/overlap/ordering.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// identity, local, takahashi, mc, mc:N or mc:N:SEED
    #[arg(long, default_value = "identity")]
    guess: InitialGuess,
}

impl SolverArgs {
    fn config(&self) -> IbmiConfig {
        IbmiConfig {
            tol: self.tol,
            max_iterations: self.max_iters,
            initial_guess: self.guess,
            ..IbmiConfig::default()
        }
    }

    fn partition(&self, p: usize) -> ibmi_core::Result<Partition> {
        if let Some(path) = &self.partition {
            let part = Partition::load_json(path)?;
            if part.p() != p {
                return Err(ibmi_core::Error::InvalidPartition(format!(
                    "partition is for p = {}, matrix has p = {p}",
                    part.p()
                )));
            }
            return Ok(part);
        }
        match self.ordering {
            SetOrdering::RedBlack => Partition::red_black(p),
            SetOrdering::Contiguous => Partition::contiguous(p, self.blocks, self.overlap),
            SetOrdering::Custom => Err(ibmi_core::Error::InvalidPartition(
                "custom ordering needs --partition".into(),
            )),
        }
    }
}

#[derive(Args)]
struct InvertArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Where to write the approximate inverse.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// First index of the second set; defaults to p/2.
    #[arg(long)]
    split: Option<usize>,
    /// K for the cost model.
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    /// Overlap fraction for the cost model.
    #[arg(long, default_value_t = 0.0)]
    overlap: f64,
    /// Also record error and bound for this many sweeps from the identity guess.
    #[arg(long)]
    trace: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4.0)]
    budget_gib: f64,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also run Newton–Schultz from X₀ = I/‖A‖₂.
    #[arg(long)]
    newton: bool,
    #[arg(long, default_value_t = 1e-8)]
    newton_tol: f64,
    #[arg(long, default_value_t = 100)]
    newton_max_iters: usize,
}

fn main() -> ExitCode {
    // Exit code 2 means partial completion here, so usage errors map to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, BenchError> {
    match cli.command {
        Command::Gen(args) => gen(args),
        Command::Invert(args) => invert(args),
        Command::Analyze(args) => analyze(args),
        Command::Bench(args) => bench(args),
        Command::Compare(args) => compare(args),
    }
}

fn print_json(v: &serde_json::Value) -> Result<(), BenchError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(v)?) {
        // The reader went away (e.g. `| head`); nothing left to do.
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn gen(args: GenArgs) -> Result<ExitCode, BenchError> {
    let spec = KernelSpec {
        family: args.kernel,
        sigma: args.sigma,
        tau: args.tau,
    };
    let a = generate(&spec, args.dim, args.p)?;
    io::save_matrix(&args.out, &a)?;
    Ok(ExitCode::SUCCESS)
}

fn invert(args: InvertArgs) -> Result<ExitCode, BenchError> {
    let a = io::load_matrix(&args.input)?;
    let part = args.solver.partition(a.rows())?;
    let report = solve(&a, &part, &args.solver.config())?;
    if let Some(out) = &args.out {
        io::save_matrix(out, &report.result)?;
    }
    let summary = json!({
        "p": a.rows(),
        "k": part.k(),
        "overlap": part.overlap_fraction(),
        "ordering": part.ordering().to_string(),
        "guess": args.solver.guess.to_string(),
        "iterations": report.iterations,
        "converged": report.converged,
        "error_trace": report.error_trace,
        "wall_times": report.wall_times,
        "total_seconds": report.total_seconds,
        "unconverged_norms": report.unconverged_norms,
    });
    match &args.report {
        Some(path) => std::fs::write(path, serde_json::to_string_pretty(&summary)?)?,
        None => print_json(&summary)?,
    }
    Ok(if report.converged { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, BenchError> {
    let a = io::load_matrix(&args.input)?;
    let p = a.rows();
    let part = Partition::two_block(p, args.split.unwrap_or(p / 2))?;
    let (i1, i2) = (part.set(0).as_slice(), part.set(1).as_slice());
    let factor = contraction_factor(&a, i1, i2)?;
    let mut out = json!({
        "p": p,
        "split": i2[0],
        "contraction_factor": factor,
        "bound_rate": factor * factor,
        "spectral_radius": spectral_radius_condition(&a, i1, i2)?,
        "cost_model": flop_cost(p, args.blocks, args.overlap)?,
    });
    if let Some(sweeps) = args.trace {
        let trace = bound_trace(&a, i1, i2, &initial_guess_identity(i2.len()), sweeps)?;
        out["trace"] = serde_json::to_value(trace)?;
    }
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode, BenchError> {
    if !(args.budget_gib > 0.0) {
        return Err(BenchError::InvalidSpec("--budget-gib must be positive".into()));
    }
    let specs = load_specs(&args.spec)?;
    let opts = RunOptions {
        memory_budget: (args.budget_gib * (1u64 << 30) as f64) as u64,
    };
    let mut rows = Vec::new();
    for spec in &specs {
        rows.extend(run_experiment_with(spec, &opts, |row| {
            if !args.quiet {
                eprintln!(
                    "{} p={} {} K={} f={} iters={:?} converged={} solve={:?}s {:?} {}",
                    row.name,
                    row.p,
                    row.kernel,
                    row.k,
                    row.overlap,
                    row.iterations,
                    row.converged,
                    row.solve_seconds,
                    row.status,
                    row.note
                );
            }
        })?);
    }
    emit_csv(&rows, &args.out)?;
    let failed = rows.iter().filter(|r| r.status == RowStatus::Failed).count();
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn compare(args: CompareArgs) -> Result<ExitCode, BenchError> {
    let a = io::load_matrix(&args.input)?;
    let part = args.solver.partition(a.rows())?;
    let row = compare_direct(&a, &part, &args.solver.config())?;
    let mut out = json!({ "ibmi": row });
    if args.newton {
        let mut x0 = DenseMatrix::identity(a.rows());
        x0.scale(1.0 / two_norm(&a).value);
        let t = std::time::Instant::now();
        let ns = newton_schultz(&a, &x0, args.newton_tol, args.newton_max_iters)?;
        let seconds = t.elapsed().as_secs_f64();
        let error = two_norm(&ns.x.sub(&spd_inverse(&a)?)?).value;
        out["newton_schultz"] = json!({
            "iterations": ns.iterations,
            "converged": ns.converged,
            "residual": ns.residual,
            "seconds": seconds,
            "error_vs_direct": error,
        });
    }
    print_json(&out)?;
    Ok(ExitCode::SUCCESS)
}
