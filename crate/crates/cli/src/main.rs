//! `apigraph`: build and evaluate parameter-level API graphs.

mod commands;
mod config;
mod providers;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "apigraph", version, about = "Build and evaluate parameter-level API graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Corpus directory of API documents, or a canonical corpus file.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Graph file, or `none` for no graph.
    #[arg(long, global = true)]
    pub graph: Option<String>,
    /// Edge types that count as connections, e.g. `strong,weak`.
    #[arg(long, global = true)]
    pub mask: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse API documents into the canonical corpus file.
    Ingest,
    /// Run the rule, semantic and context filters over all pairs.
    Filter {
        /// Domain policy file (applied with --multi-provider).
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        multi_provider: bool,
    },
    /// Build a graph file from labeled pairs.
    BuildGraph {
        #[arg(long)]
        labels: PathBuf,
        /// Replace this fraction of edges with spurious ones.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Connectivity statistics of --graph.
    Stats {
        #[arg(long, value_enum, default_value_t = DenominatorArg::Active)]
        denominator: DenominatorArg,
    },
    /// Split labeled pairs and evaluate an edge classifier.
    BenchEdges {
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Exactly two held-out domains, comma separated.
        #[arg(long, value_delimiter = ',')]
        heldout: Vec<String>,
        #[arg(long, value_enum)]
        classifier: Option<ClassifierArg>,
    },
    /// Prerequisite-API retrieval with or without --graph.
    RetrieveEval {
        #[arg(long)]
        instances: Option<PathBuf>,
        #[arg(long, value_enum)]
        selector: Option<SelectorArg>,
    },
    /// Subset selection precision against the gold --graph.
    SubsetsEval {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, value_enum)]
        generator: Option<GeneratorArg>,
        /// Graph the walk generator follows (defaults to --graph).
        #[arg(long)]
        generator_graph: Option<PathBuf>,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        min_valid: Option<usize>,
    },
    /// Run the annotation service.
    Serve {
        /// Filter report whose survivors form the queue.
        #[arg(long)]
        queue: Option<PathBuf>,
        #[arg(long)]
        addr: Option<String>,
        /// Event log file.
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenominatorArg {
    Active,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierArg {
    Gold,
    Heuristic,
    Constant,
    Model,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorArg {
    TopRank,
    Model,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorArg {
    Walk,
    Heuristic,
    Model,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
