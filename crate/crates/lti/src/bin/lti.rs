use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lti::cmd::{calc, grid, report, run};
use lti::config::parse_levels;
use lti::error::{CliError, Result};
use lti::{ExperimentSpec, Rayon};

/// Sparse-grid integration through learned triangular transport.
#[derive(Debug, Parser)]
#[command(name = "lti", version)]
struct Cli {
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, env = "LTI_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write source sparse grids for a range of levels.
    Grid {
        #[arg(long)]
        spec: PathBuf,
        /// `a..b`, `a..=b` or a single level; defaults to the experiment's levels.
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train, integrate and write reports for one experiment.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        levels: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the capacity, threshold and schedule formulas.
    Calc {
        #[command(subcommand)]
        what: Calc,
    },
    /// Summarize the reports of earlier runs.
    Report {
        /// Output directory of a run.
        #[arg(long, conflicts_with = "spec")]
        out: Option<PathBuf>,
        /// Experiment file whose output directory should be read.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum Calc {
    Constants {
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        c_d: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    Threshold {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        qoi_sup: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
    },
    Schedule {
        /// Sample sizes, e.g. `1e6,1e9,1e12`.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        c_d: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
}

fn levels_arg(arg: Option<&str>) -> Result<Option<Vec<u32>>> {
    arg.map(|s| parse_levels(s).map_err(|e| CliError::config("levels", e))).transpose()
}

fn executor(threads: usize) -> Result<Rayon> {
    Rayon::new(threads).map_err(|e| CliError::config("threads", e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Grid { spec, levels, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            let levels = levels_arg(levels.as_deref())?.unwrap_or_else(|| spec.grid.levels.clone());
            let dir = out.unwrap_or_else(|| spec.outputs.path(&spec.outputs.grids));
            let rows = grid::cmd_grid(&spec, &levels, &dir)?;
            print!("{}", grid::format_table(spec.dim, &rows));
        }
        Command::Run { spec, seed, levels, out } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            if let Some(levels) = levels_arg(levels.as_deref())? {
                spec.grid.levels = levels;
            }
            if let Some(out) = out {
                spec.outputs.dir = out;
            }
            let exec = executor(cli.threads)?;
            let outcome = run::cmd_run(&spec, &exec)?;
            println!("reference {:.12e}", outcome.reference);
            print!("{}", report::format_summary(&report::summarize(&outcome.reports)));
            println!("wrote {}", spec.outputs.dir.display());
        }
        Command::Calc { what } => {
            let text = match what {
                Calc::Constants { depth, width, dim, c_d, c } => calc::calc_constants(depth, width, dim, c_d, c)?,
                Calc::Threshold { epsilon, delta, beta, qoi_sup, c } => {
                    calc::calc_threshold(epsilon, delta, beta, qoi_sup, c)?
                }
                Calc::Schedule { n, beta, c_d, dim } => calc::calc_schedule(&n, beta, c_d, dim)?,
            };
            print!("{text}");
        }
        Command::Report { out, spec } => {
            let path = match (out, spec) {
                (Some(dir), _) => dir.join(lti::config::OutputSpec::default().reports),
                (None, Some(spec)) => {
                    let spec = ExperimentSpec::load(&spec)?;
                    spec.outputs.path(&spec.outputs.reports)
                }
                (None, None) => return Err(CliError::config("out", "pass --out or --spec")),
            };
            let reports = report::read_reports(&path)?;
            print!("{}", report::format_summary(&report::summarize(&reports)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
