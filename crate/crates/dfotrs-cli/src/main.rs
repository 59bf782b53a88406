//! Command-line front end: `dfotrs solve` runs one problem file and
//! writes its iteration trace, `dfotrs bench` runs the
//! sequential-instance benchmark. Exit codes: 0 success, 1 solver or
//! configuration failure, 2 file I/O or parse failure (clap also uses 2
//! for usage errors).

use clap::{Parser, Subcommand};
use dfotrs::bench::{self, BenchMode, BenchPlan};
use dfotrs::driver::{solve, RunMode};
use dfotrs::problems::ProblemSpec;
use dfotrs::surrogate::HistoryStore;
use dfotrs::{CompositeProblem, DfoError, SolverConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dfotrs",
    version,
    about = "Derivative-free trust-region solver for composite least-squares \
             problems, with regression reuse of stored evaluations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file and write the iteration trace as TSV
    Solve {
        /// Problem file (DFOPROB v1)
        #[arg(long)]
        problem: PathBuf,
        /// Solver configuration file (key = value lines)
        #[arg(long)]
        config: PathBuf,
        /// Evaluation-history file (DFOHIST v1). Loaded if it exists,
        /// written back (with this run's evaluations) afterwards;
        /// enables regression reuse of stored values
        #[arg(long)]
        history: Option<PathBuf>,
        /// Trace output path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the sequential-instance benchmark on a problem family
    Bench {
        /// Problem family; only "methanol" is available
        family: String,
        /// Independent replications (parallelized)
        #[arg(long, default_value_t = 5)]
        reps: u64,
        /// Instances per replication, solved in sequence
        #[arg(long, default_value_t = 20)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Oracle budget per solve, as a multiple of the one-model cost
        /// p*(n+1)
        #[arg(long, default_value_t = 2.0)]
        budget_mult: f64,
        /// history | nohistory | compare
        #[arg(long, default_value = "compare")]
        mode: String,
        /// Per-run CSV path; compare mode also writes
        /// <stem>.aggregates.csv next to it
        #[arg(long)]
        out_csv: PathBuf,
        /// Directory for SVG plots (compare mode only)
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

fn run_solve(
    problem: &Path,
    config: &Path,
    history: Option<&Path>,
    out: &Path,
) -> Result<(), DfoError> {
    let spec = ProblemSpec::load(problem)?;
    let prob = spec.build()?;
    let cfg = SolverConfig::from_file(config)?;
    let (mut store, mode) = match history {
        Some(path) if path.exists() => (HistoryStore::load(path)?, RunMode::WithHistory),
        Some(_) => (
            HistoryStore::new(prob.dim(), prob.param_dim()),
            RunMode::WithHistory,
        ),
        None => (
            HistoryStore::new(prob.dim(), prob.param_dim()),
            RunMode::NoHistory,
        ),
    };
    let report = solve(&prob, &spec.x0, &cfg, mode, &mut store)?;
    report.write_trace(out)?;
    if let Some(path) = history {
        store.save(path)?;
    }
    println!(
        "termination={} iterations={} f_best={:.16e} exact_evals={} approx_uses={} trace={}",
        report.termination.as_str(),
        report.iterations,
        report.f_best,
        report.exact_evals,
        report.approx_uses,
        out.display()
    );
    Ok(())
}

fn aggregates_path(out_csv: &Path) -> PathBuf {
    let stem = out_csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "bench".into());
    out_csv.with_file_name(format!("{stem}.aggregates.csv"))
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    family: &str,
    reps: u64,
    instances: u64,
    seed: u64,
    budget_mult: f64,
    mode: &str,
    out_csv: &Path,
    plot: Option<&Path>,
) -> Result<(), DfoError> {
    if family != "methanol" {
        return Err(DfoError::Config(format!(
            "unknown benchmark family '{family}' (available: methanol)"
        )));
    }
    let mode = BenchMode::parse(mode).ok_or_else(|| {
        DfoError::Config(format!(
            "unknown bench mode '{mode}' (expected history, nohistory, or compare)"
        ))
    })?;
    if plot.is_some() && mode != BenchMode::Compare {
        return Err(DfoError::Config("--plot needs --mode compare".into()));
    }
    let plan = BenchPlan {
        reps,
        instances,
        seed,
        budget_mult,
        mode,
    };
    let out = bench::run(&plan)?;
    bench::write_runs_csv(&out.rows, out_csv)?;
    let mut msg = format!(
        "family={family} reps={reps} instances={instances} budget={} rows={} runs_csv={}",
        plan.budget(),
        out.rows.len(),
        out_csv.display()
    );
    if mode == BenchMode::Compare {
        let agg_path = aggregates_path(out_csv);
        bench::write_aggregates_csv(&out.aggregates, &agg_path)?;
        msg.push_str(&format!(" aggregates_csv={}", agg_path.display()));
        if let Some(last) = out.aggregates.last() {
            msg.push_str(&format!(
                " final_cum_improvement={:.6e}",
                last.cum_improvement
            ));
        }
        if let Some(dir) = plot {
            bench::render_plots(&out.aggregates, dir)?;
            msg.push_str(&format!(" plots={}", dir.display()));
        }
    }
    println!("{msg}");
    Ok(())
}

fn exit_code(e: &DfoError) -> u8 {
    match e {
        DfoError::Io { .. } | DfoError::Parse { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            problem,
            config,
            history,
            out,
        } => run_solve(problem, config, history.as_deref(), out),
        Command::Bench {
            family,
            reps,
            instances,
            seed,
            budget_mult,
            mode,
            out_csv,
            plot,
        } => run_bench(
            family,
            *reps,
            *instances,
            *seed,
            *budget_mult,
            mode,
            out_csv,
            plot.as_deref(),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
