use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qnlp::assoc::Method;

mod commands;
mod config;

use config::{KernelName, RunConfig};

/// Quantum NLP experiments on a statevector simulator.
#[derive(Debug, Parser)]
#[command(name = "qnlp", version)]
struct Cli {
    /// Master seed for every random component [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run manifest; explicit flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bag-of-words topic classifier built from controlled rotations.
    Bow(BowArgs),
    /// Quantum-kernel SVM over averaged word embeddings.
    Qsvm(QsvmArgs),
    /// Density matrix and reduced traces of a bigram table.
    BigramTable(BigramArgs),
    /// Train a Born machine on a bigram distribution and sample phrases.
    QcbmFit(QcbmArgs),
    /// Association-link prediction on free-association norms.
    Assoc(AssocArgs),
    /// Verb-noun composition on a hand-built domain model.
    Compose(ComposeArgs),
}

#[derive(Debug, Args)]
pub struct BowArgs {
    /// Training file (`label<TAB>text` or `label text` lines).
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Estimate scores from this many shots instead of exact probabilities.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Rotation angle per co-occurrence [default: π/24].
    #[arg(long)]
    pub increment: Option<f64>,
    /// Vocabulary size kept after training [default: 9].
    #[arg(long)]
    pub max_words: Option<usize>,
    /// Write the trained word-topic counts as JSON.
    #[arg(long, value_name = "FILE")]
    pub model_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QsvmArgs {
    /// Embedding table, one `word v1 v2 ...` line per word.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Feature map [default: zz].
    #[arg(long, value_enum)]
    pub kernel: Option<KernelName>,
    /// Repetitions of the ZZ map [default: 2].
    #[arg(long)]
    pub reps: Option<usize>,
    /// Soft-margin penalty [default: 1].
    #[arg(short = 'C', long = "penalty")]
    pub c: Option<f64>,
    /// Write the training Gram matrix as CSV.
    #[arg(long, value_name = "FILE")]
    pub kernel_out: Option<PathBuf>,
    /// Write the trained classifier as JSON.
    #[arg(long, value_name = "FILE")]
    pub model_out: Option<PathBuf>,
    /// Load a trained classifier instead of training.
    #[arg(long, value_name = "FILE", conflicts_with = "train")]
    pub model_in: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BigramArgs {
    /// `prefix,suffix,weight` CSV.
    pub pairs: Option<PathBuf>,
    /// Write the full pair density matrix as CSV.
    #[arg(long, value_name = "FILE")]
    pub density_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QcbmArgs {
    /// `prefix,suffix,weight` CSV; the colour/item set when omitted.
    pub pairs: Option<PathBuf>,
    /// Mix this much of the uniform distribution into the target [default: 0.1].
    #[arg(long)]
    pub smooth: Option<f64>,
    /// SPSA iterations [default: 500].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Entangling layers of the ansatz [default: 4].
    #[arg(long)]
    pub layers: Option<usize>,
    /// Estimate the model distribution from shots during training.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Sample this many phrases from the trained model [default: 0].
    #[arg(long, value_name = "N")]
    pub generate: Option<usize>,
    #[arg(long, value_name = "FILE")]
    pub model_out: Option<PathBuf>,
    /// Write the objective per iteration as CSV.
    #[arg(long, value_name = "FILE")]
    pub trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AssocArgs {
    /// Norms CSV with cue, target and strength columns; the bundled synthetic
    /// graph when omitted.
    pub norms: Option<PathBuf>,
    /// Subgraph sizes [default: 16].
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    /// Runs per subgraph size [default: 20].
    #[arg(long)]
    pub runs: Option<usize>,
    /// Methods to compare [default: all].
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Proposals per method and run [default: one per held-out link].
    #[arg(short = 'M', long = "proposals")]
    pub proposals: Option<usize>,
    /// Nodes admitted per growth step [default: 1].
    #[arg(short)]
    pub k: Option<usize>,
    /// Share of links held out [default: 0.2].
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Smoothing for the smoothed Born-machine method [default: 0.1].
    #[arg(long)]
    pub smooth: Option<f64>,
    /// SPSA iterations [default: 500].
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Entangling layers of the ansatz [default: 4].
    #[arg(long)]
    pub layers: Option<usize>,
    /// Write the results table here as well as to stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write subgraph growth logs.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    pub verb: String,
    pub noun: String,
    /// Domain model JSON; the toy place/event/tech/skill domain when omitted.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or input files; exit code 2.
    Usage(String),
    /// The experiment itself failed; exit code 3.
    Runtime(String),
}

impl From<qnlp::Error> for Failure {
    fn from(e: qnlp::Error) -> Self {
        if e.is_input_error() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(&config::resolve_input(p))?,
        None => RunConfig::default(),
    };
    let name = match &cli.command {
        Command::Bow(_) => "bow",
        Command::Qsvm(_) => "qsvm",
        Command::BigramTable(_) => "bigram-table",
        Command::QcbmFit(_) => "qcbm-fit",
        Command::Assoc(_) => "assoc",
        Command::Compose(_) => "compose",
    };
    cfg.check_experiment(name)?;
    let seed = config::pick(cli.seed, cfg.seed, 0);
    let out = config::OutputPaths::new(cfg.output_dir.clone());
    match cli.command {
        Command::Bow(a) => commands::bow(a, &cfg, seed, &out),
        Command::Qsvm(a) => commands::qsvm(a, &cfg, &out),
        Command::BigramTable(a) => commands::bigram_table(a, &cfg, &out),
        Command::QcbmFit(a) => commands::qcbm_fit(a, &cfg, seed, &out),
        Command::Assoc(a) => commands::assoc(a, &cfg, seed, &out),
        Command::Compose(a) => commands::compose(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
