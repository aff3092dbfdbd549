//! `gradeirt`: fit, validate and analyze testlet IRT models of grader
//! outcomes.
//!
//! Exit status is 0 on success, 2 when the optimizer hits a non-finite
//! value, and 1 for every other failure. Log verbosity comes from
//! `GRADEIRT_LOG` (default `warn`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "gradeirt", version, about = "Psychometric evaluation of automated graders")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML); flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random draw in the run
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Grading records (.csv, .tsv or .jsonl)
    #[arg(long, global = true)]
    records: Option<PathBuf>,

    /// Response texts (.csv, .tsv or .jsonl)
    #[arg(long, global = true)]
    texts: Option<PathBuf>,

    /// Answer and reference embeddings
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,

    /// NLI probabilities
    #[arg(long, global = true)]
    nli: Option<PathBuf>,

    /// Number of quantile difficulty bins [default: 5]
    #[arg(long, global = true)]
    bins: Option<usize>,

    /// Recovery and split-half replications [default: 10]
    #[arg(long, global = true)]
    replications: Option<usize>,

    /// Neighbours for the kNN distance features [default: 5]
    #[arg(long = "k-nn", global = true)]
    k_nn: Option<usize>,

    /// Simulated graders
    #[arg(long, global = true)]
    graders: Option<usize>,

    /// Simulated responses
    #[arg(long, global = true)]
    responses: Option<usize>,

    /// Simulated questions
    #[arg(long, global = true)]
    testlets: Option<usize>,

    /// Standard deviation of simulated testlet effects
    #[arg(long = "sigma-u", global = true)]
    sigma_u: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the model and write parameters with convergence metadata
    Fit,
    /// Parameter recovery and split-half stability reports
    Validate,
    /// Difficulty bins, accuracy slopes, confusion matrices and feature correlations
    Analyze,
    /// Lexical, embedding and NLI feature table
    Features,
    /// Synthetic records, texts, embeddings and NLI scores with known parameters
    Simulate,
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::load(cli)?;
    match cli.command {
        Command::Fit => commands::fit(&cfg),
        Command::Validate => commands::validate(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Features => commands::features(&cfg),
        Command::Simulate => commands::simulate(&cfg),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e
        .downcast_ref::<gradeirt::Error>()
        .is_some_and(gradeirt::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRADEIRT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn exit_codes() {
        let numerical: anyhow::Result<()> = Err(gradeirt::Error::NonFinite {
            what: "loss",
            iteration: 3,
        })
        .context("fitting dataset d");
        assert_eq!(exit_code(&numerical.unwrap_err()), 2);
        let input = anyhow::Error::from(gradeirt::Error::InvalidArgument("x".into()));
        assert_eq!(exit_code(&input), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }

    #[test]
    fn cli_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
