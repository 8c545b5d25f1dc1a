mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// SimRank-aggregated node classification.
#[derive(Debug, Parser)]
#[command(name = "simga", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Inputs and outputs shared by the subcommands.
#[derive(Debug, Clone, Args)]
pub struct Shared {
    /// Edge list: one `u v` pair per line.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Feature matrix: one whitespace-separated row per node.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Labels: one class id per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub train_split: Option<PathBuf>,
    #[arg(long)]
    pub val_split: Option<PathBuf>,
    #[arg(long)]
    pub test_split: Option<PathBuf>,
    /// Directory holding edges.txt, features.txt, labels.txt, train.txt,
    /// val.txt and test.txt; individual flags take precedence.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// `key = value` hyperparameter file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Hyperparameter overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SimRank decay factor.
    #[arg(long = "c")]
    pub decay: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Scores kept per row.
    #[arg(long = "k")]
    pub topk: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub main_depth: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long = "epochs")]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience in epochs, or `inf`.
    #[arg(long)]
    pub patience: Option<String>,
    /// auto, exact or approx.
    #[arg(long)]
    pub sim_mode: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the node homophily of a labeled graph.
    Homophily {
        #[command(flatten)]
        shared: Shared,
    },
    /// Compute the pruned similarity matrix and write its dump.
    Simrank {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 0.6)]
        c: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1024)]
        k: usize,
        /// exact or approx.
        #[arg(long, default_value = "exact")]
        mode: String,
        /// Also write a score histogram split by label agreement (needs --labels).
        #[arg(long)]
        histogram: bool,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long, default_value_t = 1e-6)]
        floor: f64,
    },
    /// Train the model and write report.json, checkpoint.txt and embeddings.txt.
    Train {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        hyper: HyperArgs,
        /// Precomputed similarity dump to use instead of computing one.
        #[arg(long)]
        sim: Option<PathBuf>,
    },
    /// Score a checkpoint on one split.
    Eval {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sim: Option<PathBuf>,
        /// train, val or test.
        #[arg(long, default_value = "test")]
        split: String,
        /// Node pairs sampled for the embedding distance summary.
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
    },
    /// Run the built-in numerical cross-checks.
    Verify {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, default_value_t = 0.6)]
        c: f64,
        #[arg(long, hide = true)]
        corrupt_push: Option<f64>,
    },
    /// Time precomputation plus one epoch over a ladder of graph sizes.
    Bench {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
        ladder: Vec<usize>,
        /// Average degree.
        #[arg(long, default_value_t = 8.0)]
        degree: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Homophily { shared } => commands::homophily(&shared),
        Command::Simrank {
            shared,
            c,
            eps,
            k,
            mode,
            histogram,
            bins,
            floor,
        } => commands::simrank(&shared, c, eps, k, &mode, histogram.then_some((bins, floor))),
        Command::Train { shared, hyper, sim } => commands::train(&shared, &hyper, sim.as_deref()),
        Command::Eval {
            shared,
            checkpoint,
            sim,
            split,
            pairs,
        } => commands::eval(&shared, &checkpoint, sim.as_deref(), &split, pairs),
        Command::Verify {
            shared,
            c,
            corrupt_push,
        } => commands::verify(&shared, c, corrupt_push),
        Command::Bench {
            shared,
            ladder,
            degree,
            eps,
            k,
            repeats,
        } => commands::bench(&shared, ladder, degree, eps, k, repeats),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            if let Some(hint) = &e.hint {
                eprintln!("hint: {hint}");
            }
            ExitCode::from(e.code)
        }
    }
}
