//! Periocular gender-classification pipeline CLI.
//!
//! Subcommands wire dataset -> features -> training -> selection ->
//! evaluation -> statistics. Exit codes: 0 success, 1 usage/config error,
//! 2 data error, 3 internal invariant breach.

mod commands;
mod config;
mod pipeline;

use clap::{Args, Parser, Subcommand};
use config::Config;
use periocular::error::Error;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "periocular", version, about = "Periocular NIR gender-classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (overrides the config `out` key).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Split the manifest and cache resized (optionally occluded) images.
    Prepare(CommonArgs),
    /// Cross-validate one experiment and evaluate the held-out subjects.
    Experiment(CommonArgs),
    /// Gini-importance threshold sweep plus pixel overlays.
    Relevance {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated thresholds (overrides the config key).
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
    },
    /// Bootstrap functional ANOVA over a curves CSV.
    Fanova {
        #[command(flatten)]
        common: CommonArgs,
        /// Curves CSV: header `group,...`, one curve per row.
        #[arg(long)]
        curves: PathBuf,
        /// Bootstrap resamples (config key n_boot; default 1000).
        #[arg(long)]
        n_boot: Option<usize>,
    },
    /// Generate the synthetic annulus benchmark corpus.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Subject count (default 100).
        #[arg(long)]
        subjects: Option<usize>,
        /// Images per subject (default 4).
        #[arg(long)]
        images_per_subject: Option<usize>,
    },
}

fn effective_config(common: &CommonArgs) -> Result<Config, Error> {
    let mut cfg = match &common.config {
        Some(path) => Config::from_file(path)?,
        None => Config::empty(),
    };
    if let Some(seed) = common.seed {
        cfg.set_override("seed", seed);
    }
    if let Some(out) = &common.out {
        cfg.set_override("out", out.display().to_string());
    }
    if let Some(jobs) = common.jobs {
        cfg.set_override("jobs", jobs);
    }
    Ok(cfg)
}

fn out_dir(cfg: &Config) -> Result<PathBuf, Error> {
    Ok(cfg.resolve_path(cfg.require("out")?))
}

fn setup_jobs(cfg: &Config) -> Result<(), Error> {
    let jobs: usize = cfg.get_or("jobs", 0)?;
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Prepare(common) => {
            let cfg = effective_config(&common)?;
            setup_jobs(&cfg)?;
            commands::prepare(&cfg, &out_dir(&cfg)?)
        }
        Command::Experiment(common) => {
            let cfg = effective_config(&common)?;
            setup_jobs(&cfg)?;
            commands::experiment(&cfg, &out_dir(&cfg)?)
        }
        Command::Relevance { common, thresholds } => {
            let cfg = effective_config(&common)?;
            setup_jobs(&cfg)?;
            commands::relevance_cmd(&cfg, &out_dir(&cfg)?, thresholds)
        }
        Command::Fanova { common, curves, n_boot } => {
            let mut cfg = effective_config(&common)?;
            if let Some(n) = n_boot {
                cfg.set_override("n_boot", n);
            }
            setup_jobs(&cfg)?;
            let out = cfg.get("out").map(|o| cfg.resolve_path(o));
            commands::fanova_cmd(&cfg, &curves, out.as_deref())
        }
        Command::Synth { common, subjects, images_per_subject } => {
            let mut cfg = effective_config(&common)?;
            if let Some(s) = subjects {
                cfg.set_override("synth_subjects", s);
            }
            if let Some(i) = images_per_subject {
                cfg.set_override("synth_images_per_subject", i);
            }
            setup_jobs(&cfg)?;
            commands::synth_cmd(&cfg, &out_dir(&cfg)?)
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) | Error::Argument(_) => 1,
        _ => 2,
    }
}

fn main() {
    let outcome = std::panic::catch_unwind(run);
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
        // A panic means an internal invariant broke, not bad input.
        Err(_) => 3,
    };
    std::process::exit(code);
}
