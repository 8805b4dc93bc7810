//! `mpsqc` — train and evaluate the matrix product state quantum
//! classifier on tabular datasets by exact simulation.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "mpsqc",
    version,
    about = "Matrix product state quantum classifier: prepare tasks, train, evaluate, cross-check backends"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest a dataset and write pairwise binary task manifests.
    Prepare(commands::PrepareArgs),
    /// Train the classifier on a task's training split.
    Train(commands::TrainArgs),
    /// Evaluate a trained model on a task split and write the reports.
    Eval(commands::EvalArgs),
    /// Score raw feature rows with a trained model.
    Predict(commands::PredictArgs),
    /// Cross-validate the dense and tensor-train backends on random circuits.
    Xcheck(commands::XcheckArgs),
    /// Aggregate eval reports in a directory into one summary table.
    Report(commands::ReportArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prepare(args) => commands::prepare(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Predict(args) => commands::predict(args),
        Command::Xcheck(args) => commands::xcheck_cmd(args),
        Command::Report(args) => commands::report(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
