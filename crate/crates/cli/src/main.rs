use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mppstat_cli::config::{cov_from_flags, ExperimentConfig};
use mppstat_cli::run::{self, EstimateOptions};
use mppstat_cli::report;

#[derive(Parser)]
#[command(name = "mppstat", version, about = "Simulate marked point processes and estimate weighted mean marks")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "MPPSTAT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one pattern CSV per realization plus manifest.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the configured estimators and write a results CSV.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Estimate from existing pattern files instead of simulating.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Weight strategy for `mu_hat_weighted` estimators.
        #[arg(long, value_parser = ["equal", "alpha", "count", "rfvar"])]
        weights: Option<String>,
        /// Covariance model for rfvar weights: spherical or truncated_exponential.
        #[arg(long, requires = "cov_params")]
        cov_model: Option<String>,
        /// `variance,range` of the covariance model.
        #[arg(long, requires = "cov_model")]
        cov_params: Option<String>,
        /// Record per-estimator wall time (makes output non-reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Inference commands.
    Infer {
        #[command(subcommand)]
        command: InferCommand,
    },
    /// Summarize a results CSV and emit a gnuplot script.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum InferCommand {
    /// Per-realization normal-approximation statistics and intervals.
    Clt {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long, default_value = "clt.csv")]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, u64)> {
    let cfg = ExperimentConfig::load(&common.config)?;
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok((cfg, seed))
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Simulate { common, out } => {
            let (cfg, seed) = load(&common)?;
            let m = run::simulate(&cfg, seed, &out)?;
            eprintln!("wrote {} patterns to {}", m.realizations.len(), out.display());
        }
        Command::Estimate {
            common,
            patterns,
            out,
            weights,
            cov_model,
            cov_params,
            timings,
        } => {
            let (mut cfg, seed) = load(&common)?;
            if let (Some(m), Some(p)) = (cov_model, cov_params) {
                cfg.covariance = Some(cov_from_flags(&m, &p)?);
            }
            cfg.validate()?;
            if let Some(w) = &weights {
                cfg.strategy(w)?;
            }
            let opts = EstimateOptions {
                weights_override: weights,
                timings,
            };
            let rows = match &patterns {
                Some(dir) => run::estimate_from_dir(&cfg, dir, seed, &opts)?,
                None => run::estimate_simulated(&cfg, seed, &opts)?,
            };
            let out = out
                .or_else(|| cfg.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("results.csv"));
            run::write_rows(&rows, &out)?;
            let undefined = rows.iter().filter(|r| r.value.is_none()).count();
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            if undefined > 0 {
                eprintln!("{undefined} estimates are undefined (no qualifying pairs)");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Infer {
            command: InferCommand::Clt { common, patterns, out },
        } => {
            let (cfg, seed) = load(&common)?;
            let pats = match &patterns {
                Some(dir) => run::load_pattern_dir(dir)?,
                None => run::simulate_patterns(&cfg, seed)?,
            };
            let (rows, summary) = run::infer_clt(&cfg, &pats)?;
            run::write_rows(&rows, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            if rows.iter().any(|r| r.centered_stat.is_none()) {
                eprintln!("some realizations have no exceedance pairs");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Report { results, out } => {
            for w in report::report(&results, &out)? {
                eprintln!("warning: {w}");
            }
            eprintln!("wrote {}", out.join("summary.csv").display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
