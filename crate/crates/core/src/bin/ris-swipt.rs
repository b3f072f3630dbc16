//! Command-line front end: single runs, baselines and parameter sweeps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 the batch
//! finished but some cell did not report `converged`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ris_swipt::harness::{
    load_config, run_methods, run_sweep, write_csv, CellLabel, Method, ResultRow, SweepParam,
    SweepRunOptions, SweepSpec,
};
use ris_swipt::optimizer::SolveStatus;

#[derive(Parser)]
#[command(
    name = "ris-swipt",
    version,
    about = "RIS-aided MISO SWIPT design and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel draw with the full design and both baselines.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Record wall-clock time per solve.
        #[arg(long)]
        timing: bool,
    },
    /// Monte-Carlo sweep of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of n_ris, lambda_bar, f_min, k_users.
        #[arg(long)]
        param: String,
        /// Comma-separated increasing values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        drops: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Subset of full_ris, no_ris, random_phase (default all).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long)]
        timing: bool,
    },
    /// Solve one channel draw with a single baseline design.
    Baseline {
        #[arg(long, value_enum)]
        mode: BaselineMode,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMode {
    NoRis,
    RandomPhase,
}

enum Failure {
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(rows) => {
            let unconverged = rows
                .iter()
                .filter(|r| r.status != SolveStatus::Converged.as_str())
                .count();
            if unconverged > 0 {
                eprintln!("{unconverged} of {} rows did not converge", rows.len());
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<Vec<ResultRow>, Failure> {
    match command {
        Command::Run {
            config,
            seed,
            out,
            timing,
        } => single(&config, seed, &out, &Method::ALL, "run.csv", timing),
        Command::Baseline {
            mode,
            config,
            seed,
            out,
            timing,
        } => {
            let method = match mode {
                BaselineMode::NoRis => Method::NoRis,
                BaselineMode::RandomPhase => Method::RandomPhase,
            };
            single(&config, seed, &out, &[method], "baseline.csv", timing)
        }
        Command::Sweep {
            config,
            param,
            values,
            drops,
            seed,
            out,
            methods,
            timing,
        } => {
            let cfg = load_config(&config)?;
            let spec = SweepSpec {
                parameter: param.parse::<SweepParam>()?,
                values,
                drops,
                master_seed: seed,
            };
            let methods = if methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                methods
                    .iter()
                    .map(|m| m.parse::<Method>())
                    .collect::<Result<_, _>>()?
            };
            let outcome = run_sweep(&cfg, &spec, &out, &SweepRunOptions { methods, timing })?;
            println!(
                "wrote {}, {}, {}",
                outcome.rows_path.display(),
                outcome.aggregate_path.display(),
                outcome.plot_path.display()
            );
            Ok(outcome.rows)
        }
    }
}

fn single(
    config: &Path,
    seed: u64,
    out: &Path,
    methods: &[Method],
    file: &str,
    timing: bool,
) -> Result<Vec<ResultRow>, Failure> {
    let cfg = load_config(config)?;
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    let rows = run_methods(&cfg, seed, methods, &CellLabel::single(), timing)?;
    let path = out.join(file);
    write_csv(&path, &rows)?;
    for r in &rows {
        println!(
            "{:<13} sum_rate {:9.4} rate_ph {:8.4} harvested {:.4e} mW objective {:9.4} {}",
            r.method,
            r.sum_rate_bpshz,
            r.rate_ph,
            r.harvested_power_mw_total,
            r.objective,
            r.status
        );
    }
    println!("wrote {}", path.display());
    Ok(rows)
}
