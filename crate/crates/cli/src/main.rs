mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigArgs;

/// Synonym identification for Chinese/English medical term pairs.
#[derive(Debug, Parser)]
#[command(name = "medsyn", version)]
struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the feature matrix of a pair file and write it as TSV.
    Features {
        #[command(flatten)]
        config: ConfigArgs,
        /// Features to compute, as comma-separated ids (default: all 13).
        #[arg(long)]
        mask: Option<String>,
        /// Output file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model on a feature table and save it as JSON.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Feature table written by `features`.
        #[arg(long)]
        features: PathBuf,
        /// Train on these feature ids only (default: every column).
        #[arg(long)]
        mask: Option<String>,
        /// Where to write the model.
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Apply a saved model to a feature table and print precision, recall and F1.
    Eval {
        /// Model written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Feature table with exactly the model's features.
        #[arg(long)]
        features: PathBuf,
        /// Also write per-row decision values and predictions here.
        #[arg(long)]
        predictions_out: Option<PathBuf>,
    },
    /// Train and evaluate every non-empty feature subset on one split.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Re-rank an existing sweep report: top-k table and feature frequencies.
    Report {
        /// Report TSV written by `sweep`.
        report: PathBuf,
        /// Rows in the table.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Share of ranked rows used for feature frequencies.
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        /// Also write the frequencies as TSV here.
        #[arg(long)]
        frequency_out: Option<PathBuf>,
    },
    /// Count document and co-document frequencies of a vocabulary in a corpus.
    CorpusIndex {
        /// Document file, one document per line.
        #[arg(
            long,
            conflicts_with = "documents_dir",
            required_unless_present = "documents_dir"
        )]
        documents: Option<PathBuf>,
        /// Directory with one document per file.
        #[arg(long)]
        documents_dir: Option<PathBuf>,
        /// Vocabulary file, one term per line.
        #[arg(long, conflicts_with = "pairs", required_unless_present = "pairs")]
        vocabulary: Option<PathBuf>,
        /// Take the vocabulary from the terms of a pair file.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Where to write the index.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Command failure, split by exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation: exit 1.
    Usage(String),
    /// Bad data or settings: exit 2.
    Data(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Failure::Data(anyhow::anyhow!(msg.into()))
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<medsyn::Error> for Failure {
    fn from(e: medsyn::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    // Built explicitly so no environment variable changes behavior.
    env_logger::Builder::new().filter_level(level).init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
