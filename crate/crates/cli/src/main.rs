mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

#[derive(Parser, Debug)]
#[command(name = "ctxsteer", version, about = "Compression-distance analysis with context steering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML file of settings; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Corpus directory laid out as <root>/<class>/<file>
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Distance matrix CSV written by `distances` (its .json sidecar is read too)
    #[arg(long)]
    matrix: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the pairwise distance matrix of a corpus
    Distances {
        #[arg(long)]
        corpus: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Also write NRC row statistics measured against this corpus
        #[arg(long)]
        stats_reference: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build an embedding model from every object
    Steer {
        #[command(flatten)]
        input: Input,
        /// Model JSON path
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validated evaluation of one method
    Eval {
        #[command(flatten)]
        input: Input,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// One evaluation per grid point, or per class subset
    Sweep {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
        /// Rerun on every class subset of these sizes instead of the grid
        #[arg(long, value_delimiter = ',')]
        subset_sizes: Option<Vec<usize>>,
        #[command(flatten)]
        common: Common,
    },
    /// Per-class Ward trees as Newick and JSON
    Tree {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write a synthetic Markov-text corpus
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        sources: usize,
        /// Documents per source
        #[arg(long, default_value_t = 60)]
        docs: usize,
        /// Symbols per document
        #[arg(long, default_value_t = 2048)]
        length: usize,
        /// Blend of every source towards a shared table, 0..1
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        /// Fraction of each class drawn from unrelated tables
        #[arg(long, default_value_t = 0.0)]
        atypical: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
            });
            eprintln!("{record}");
            ExitCode::from(1)
        }
    }
}
