//! Command-line front end for noisy-label Naive Bayes.

mod analyze;
mod bench;
mod common;
mod evaluate;
mod featurize;
mod predict;
mod simulate;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{CliError, CliResult, Format};

#[derive(Debug, Parser)]
#[command(name = "noisynb", version, about = "Naive Bayes under label noise")]
struct Cli {
    /// Worker threads (all cores when omitted).
    #[arg(long, global = true, env = "NOISYNB_THREADS")]
    threads: Option<usize>,
    /// Layout of tabular output on standard output.
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,
    /// More log output on standard error; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a labeled text corpus into a binary dataset.
    Featurize(featurize::FeaturizeArgs),
    /// Draw a synthetic dataset with noisy training labels.
    Simulate(simulate::SimulateArgs),
    /// Fit a model.
    Train(train::TrainArgs),
    /// Label a dataset with a fitted model.
    Predict(predict::PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(evaluate::EvaluateArgs),
    /// Run the replicated simulation study.
    Bench(bench::BenchArgs),
    /// Closed-form analyses.
    #[command(subcommand)]
    Analyze(analyze::AnalyzeCommand),
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match &cli.command {
        Command::Featurize(a) => featurize::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Train(a) => train::run(a),
        Command::Predict(a) => predict::run(a),
        Command::Evaluate(a) => evaluate::run(a, cli.format),
        Command::Bench(a) => bench::run(a, cli.format),
        Command::Analyze(c) => analyze::run(c, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("noisynb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
