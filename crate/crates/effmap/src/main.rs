use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use effmap::commands::{self, Context, Summary};
use effmap::config::{MethodKind, RunConfig};
use effmap::exec::default_workers;
use effmap::Result;

#[derive(Parser)]
#[command(
    name = "effmap",
    version,
    about = "Efficiency-map uncertainty quantification and sensitivity analysis"
)]
struct Cli {
    /// Run configuration (TOML, or JSON by extension). Built-in defaults when absent.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides `output`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `workers` and EFFMAP_WORKERS).
    #[arg(short, long, global = true)]
    workers: Option<usize>,
    /// Estimation method (overrides `method.kind`).
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Random seed (overrides `method.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample size (overrides `method.mc.n_samples`).
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mc,
    Pce,
}

#[derive(Subcommand)]
enum Command {
    /// Nominal efficiency map and torque envelope.
    Map,
    /// Mean and standard deviation fields.
    Uq {
        /// Also run the other method and write pointwise absolute differences.
        #[arg(long)]
        compare: bool,
    },
    /// Sobol' indices per operating point and generalized indices.
    Gsa,
    /// Fix non-influential parameters and report the error of the statistics.
    Reduce {
        /// Generalized total-index threshold (overrides `reduction.threshold`).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Write the synthetic four-phase speed profile as a cycle CSV.
    Cycle {
        /// Destination file.
        path: PathBuf,
        /// Sampling step in seconds.
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
}

fn run(cli: Cli) -> Result<Summary> {
    if let Command::Cycle { path, step } = &cli.command {
        return commands::cmd_cycle(path, *step);
    }
    let (mut config, base) = match &cli.config {
        Some(p) => (
            RunConfig::load(p)?,
            p.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (RunConfig::default(), PathBuf::new()),
    };
    if let Some(m) = cli.method {
        config.method.kind = match m {
            Method::Mc => MethodKind::Mc,
            Method::Pce => MethodKind::Pce,
        };
    }
    if let Some(seed) = cli.seed {
        config.method.seed = seed;
    }
    if let Some(n) = cli.samples {
        config.method.mc.n_samples = n;
    }
    if let Command::Reduce { threshold: Some(t) } = cli.command {
        config.reduction.threshold = t;
    }
    // A command-line output directory is relative to the working directory,
    // a configured one to the config file.
    let out = match &cli.out {
        Some(out) => out.clone(),
        None => base.join(&config.output),
    };
    let workers = match cli.workers.or(config.workers) {
        Some(n) => n,
        None => default_workers()?,
    };
    let ctx = Context::new(config, &base, out, workers)?;
    match cli.command {
        Command::Map => commands::cmd_map(&ctx),
        Command::Uq { compare } => commands::cmd_uq(&ctx, compare),
        Command::Gsa => commands::cmd_gsa(&ctx),
        Command::Reduce { .. } => commands::cmd_reduce(&ctx),
        Command::Cycle { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            for line in &summary.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
