//! `glmdiag`: fit gamma and inverse Gaussian GLMs from CSV, write residual
//! tables, envelopes and plots, and run Monte Carlo scenarios.

mod commands;
mod config;
mod data;
mod error;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use glmdiag::glm::{Family, Link};
use glmdiag::reference::Table;
use glmdiag::residuals::ResidualKind;

use commands::{EnvelopeInput, ModelInput, SimulateInput};
use error::CliError;

/// Seconds after which scenario runs stop starting new replications.
const TIME_BUDGET_ENV: &str = "GLMDIAG_TIME_BUDGET_SECS";

#[derive(Parser)]
#[command(
    name = "glmdiag",
    version,
    about = "Residual diagnostics for gamma and inverse Gaussian GLMs"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "GLMDIAG_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// gamma | invgauss
    #[arg(long)]
    family: Family,
    /// log | inverse | inverse2 | identity
    #[arg(long, default_value = "log")]
    link: Link,
    /// Response column.
    #[arg(long)]
    response: String,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
    /// Fit without an intercept column.
    #[arg(long)]
    no_intercept: bool,
}

impl ModelArgs {
    fn input(&self) -> ModelInput<'_> {
        ModelInput {
            data: &self.data,
            family: self.family,
            link: self.link,
            response: &self.response,
            covariates: &self.covariates,
            intercept: !self.no_intercept,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model and write coefficients, dispersion and leverages.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a residual table and residual-vs-linear-predictor plots.
    Residuals {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated kinds, or "all".
        #[arg(long, default_value = "all")]
        kinds: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Normal and half-normal plots with simulated envelopes.
    Envelope {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "adjusted_quantile")]
        kinds: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        nsim_envelope: usize,
        #[arg(long, default_value_t = 0.95)]
        band: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run scenarios: a built-in name ("I-a", "I-a:15", "all") or a TOML file.
    Simulate {
        source: String,
        /// Comma-separated kinds, or "all" (default: all, or the file's list).
        #[arg(long)]
        kinds: Option<String>,
        /// Default 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Default 5000.
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Re-run the scenarios behind a reference table (T1, T2, T5, T6, T7, T8)
    /// and compare against the tabulated values.
    Reproduce {
        table: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5000)]
        reps: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn kinds(list: &str) -> Result<Vec<ResidualKind>, CliError> {
    ResidualKind::parse_list(list).map_err(|e| CliError::Usage(e.to_string()))
}

fn time_budget() -> Result<Option<Duration>, CliError> {
    match std::env::var(TIME_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<f64>()
            .ok()
            .and_then(|s| Duration::try_from_secs_f64(s).ok())
            .map(Some)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{TIME_BUDGET_ENV}: '{v}' is not a number of seconds"
                ))
            }),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Run(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Fit { model, out } => commands::cmd_fit(&model.input(), &out),
        Command::Residuals {
            model,
            kinds: k,
            out,
        } => commands::cmd_residuals(&model.input(), &kinds(&k)?, &out),
        Command::Envelope {
            model,
            kinds: k,
            seed,
            nsim_envelope,
            band,
            out,
        } => commands::cmd_envelope(
            &model.input(),
            &EnvelopeInput {
                kinds: kinds(&k)?,
                seed,
                n_sim: nsim_envelope,
                band,
            },
            &out,
        ),
        Command::Simulate {
            source,
            kinds: k,
            seed,
            reps,
            out,
        } => commands::cmd_simulate(
            &SimulateInput {
                source: &source,
                kinds: k.as_deref().map(kinds).transpose()?,
                seed,
                reps,
                budget: time_budget()?,
            },
            &out,
        ),
        Command::Reproduce {
            table,
            seed,
            reps,
            out,
        } => {
            let t = Table::parse(&table).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown table '{table}' (expected T1, T2, T5, T6, T7 or T8)"
                ))
            })?;
            if reps < 3 {
                return Err(CliError::Usage("--reps must be at least 3".into()));
            }
            commands::cmd_reproduce(t, seed, reps, time_budget()?, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
