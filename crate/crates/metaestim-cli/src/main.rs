//! Command-line surface of the estimation toolkit: run a problem file,
//! benchmark the methods against each other, map a fitness landscape, or
//! tune the predator-prey oscillation period.

mod output;
mod problem;

use clap::{Parser, Subcommand};
use metaestim::benchmarks::{compare_algorithms, comparison_grid};
use metaestim::dynamics::period_demo_series;
use metaestim::dynamics::PPParams;
use metaestim::{extremize, AlgorithmOptions, Estimates, Method};
use problem::{ObjectiveKind, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Seed used when neither the problem file nor --seed provides one.
const DEFAULT_SEED: u64 = 161803;

#[derive(Parser)]
#[command(
    name = "metaestim",
    version,
    about = "Derivative-free parameter estimation for expensive simulation models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a problem file to completion and write the result artifacts.
    Extremize {
        /// Problem file (key = value lines or a JSON object).
        problem: PathBuf,
        /// Directory receiving best.csv, iteration_bests.csv,
        /// visited_space.csv and stats.json.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the problem file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Parallel evaluations per batch (external models).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare the methods on the benchmark grid and write the report CSV.
    Benchmark {
        #[arg(long, default_value_t = 7)]
        replicates: u32,
        #[arg(long, default_value_t = 0.1)]
        tolerance: f64,
        /// Replicate r of every cell runs with seed + r.
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "comparison.csv")]
        out: PathBuf,
    },
    /// Map the fitness landscape: run capped at a budget, then grid the
    /// visited space over every adjacent parameter pair.
    Explore {
        problem: PathBuf,
        /// Evaluation cap (must be at least 10x the dimension).
        #[arg(long, default_value_t = 620)]
        budget: u64,
        /// Cells per axis of each surface file.
        #[arg(long, default_value_t = 25)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Tune predator-prey rates over [0.2,2]^4 until the oscillation
    /// period matches the target; writes the run artifacts plus the best
    /// series as series.csv.
    TunePeriod {
        /// Target period in output samples.
        #[arg(long)]
        target: f64,
        #[arg(long, default_value = "pso")]
        method: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failures that map to documented exit codes: 2 for an invalid problem
/// file or arguments, 3 for an evaluator that cannot be set up.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Setup(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) | CliError::Setup(m) => f.write_str(m),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(2),
            CliError::Setup(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Extremize {
            problem,
            out,
            seed,
            jobs,
        } => cmd_extremize(&problem, &out, seed, jobs),
        Command::Benchmark {
            replicates,
            tolerance,
            seed,
            out,
        } => cmd_benchmark(replicates, tolerance, seed, &out),
        Command::Explore {
            problem,
            budget,
            grid,
            out,
            seed,
            jobs,
        } => cmd_explore(&problem, budget, grid, &out, seed, jobs),
        Command::TunePeriod {
            target,
            method,
            out,
            seed,
        } => cmd_tune_period(target, &method, &out, seed),
    }
}

/// Resolves the run inputs shared by the problem-running commands and
/// executes the method.
fn run_problem(
    problem: &Problem,
    base_dir: &Path,
    seed_flag: Option<u64>,
    jobs: Option<usize>,
    budget: Option<u64>,
) -> Result<(Estimates, u64, AlgorithmOptions), CliError> {
    let mut obj = problem.objective(base_dir)?;
    if let Some(b) = budget {
        obj.set_eval_budget(Some(b));
    }
    if let Some(k) = jobs {
        obj.set_jobs(k);
    }
    let mut options = AlgorithmOptions::defaults(problem.method);
    for (key, value) in &problem.options {
        options
            .apply_override(key, value)
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let seed = seed_flag.or(problem.seed).unwrap_or(DEFAULT_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = extremize(problem.method, &mut obj, Some(options.clone()), &mut rng)
        .map_err(CliError::from_library)?;
    Ok((est, seed, options))
}

fn base_dir(problem_path: &Path) -> PathBuf {
    problem_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn cmd_extremize(
    problem_path: &Path,
    out: &Path,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let problem = Problem::load(problem_path)?;
    let (est, seed, options) = run_problem(&problem, &base_dir(problem_path), seed, jobs, None)?;
    output::write_run(out, &problem.space()?, &est, seed, &options)?;
    Ok(())
}

fn cmd_benchmark(replicates: u32, tolerance: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    let methods = [Method::Pso, Method::Saa, Method::Acor, Method::Ees1];
    let report = compare_algorithms(&comparison_grid(), &methods, replicates, tolerance, seed)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, report.to_csv())?;
    Ok(())
}

fn cmd_explore(
    problem_path: &Path,
    budget: u64,
    grid: usize,
    out: &Path,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let problem = Problem::load(problem_path)?;
    let dim = problem.parameters.len() as u64;
    if budget < dim * 10 {
        return Err(CliError::Invalid(format!(
            "budget {budget} is below 10 evaluations per dimension ({} needed)",
            dim * 10
        )));
    }
    if grid < 1 {
        return Err(CliError::Invalid("grid must be at least 1".into()));
    }
    let (est, seed, options) =
        run_problem(&problem, &base_dir(problem_path), seed, jobs, Some(budget))?;
    let space = problem.space()?;
    output::write_visited(out, &space, &est)?;
    output::write_stats(out, &est, seed, &options)?;
    output::write_surfaces(out, &space, &est.visited_space, grid)?;
    Ok(())
}

fn cmd_tune_period(
    target: f64,
    method: &str,
    out: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if !(target > 0.0) {
        return Err(CliError::Invalid(format!(
            "target period must be positive, got {target}"
        )));
    }
    let method = Method::parse(method).map_err(|e| CliError::Invalid(e.to_string()))?;
    let problem = Problem {
        objective: ObjectiveKind::PeriodTuning { target },
        parameters: ["x1", "x2", "x3", "x4"]
            .iter()
            .map(|n| (n.to_string(), 0.2, 2.0))
            .collect(),
        method,
        options: Vec::new(),
        seed: None,
        tolerance: Some(0.05),
        external: None,
    };
    let (est, seed, options) =
        run_problem(&problem, Path::new("."), seed, None, Some(2000))?;
    output::write_run(out, &problem.space()?, &est, seed, &options)?;
    let p = PPParams::new(
        est.best.values[0],
        est.best.values[1],
        est.best.values[2],
        est.best.values[3],
    );
    match period_demo_series(&p, target) {
        Ok(series) => std::fs::write(out.join("series.csv"), series.to_csv())?,
        Err(e) => eprintln!("warning: best parameters produced no usable series: {e}"),
    }
    Ok(())
}
