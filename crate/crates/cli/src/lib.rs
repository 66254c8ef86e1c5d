//! Command-line drivers for Gaussian tensor network embeddings.

pub mod accuracy;
pub mod commands;
pub mod embeddings;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tensketch::io::{load_network, load_tree, write_json};
use tensketch::{Error, Result};

use accuracy::{run_accuracy, write_csv, AccuracyConfig, InputKind};
use commands::{cmd_cost, cmd_cp_als, cmd_sketch, cmd_tt_round, write_cp_trace, write_tt_trace, CpConfig, TtConfig};
pub use embeddings::EmbeddingChoice;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tensketch", version, about = "Sketch tensor networks with Gaussian tensor network embeddings")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputArg {
    TensorTrain,
    Kronecker,
    File,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest sketch size meeting an error threshold, per input and embedding (CSV).
    Accuracy(AccuracyArgs),
    /// Modeled costs, lower bounds and ratios for every embedding (JSON).
    Cost(CostArgs),
    /// Sketch a network file; writes the result tensor and prints a flop ledger.
    Sketch(SketchArgs),
    /// Sketched CP-ALS on a synthetic low-rank tensor.
    CpAls(CpArgs),
    /// Tensor-train rounding sketch of a random train.
    TtRound(TtArgs),
}

#[derive(Debug, Args)]
pub struct AccuracyArgs {
    #[arg(long, value_enum, default_value = "kronecker")]
    pub input: InputArg,
    /// Network file for `--input file`.
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, default_value_t = 1000)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["tn", "tree", "tt", "khatri-rao"])]
    pub embedding: Vec<EmbeddingChoice>,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Number of random inputs.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 2)]
    pub repeats: usize,
    #[arg(long, default_value_t = 2)]
    pub m_min: usize,
    #[arg(long)]
    pub m_max: Option<usize>,
    /// Search cap for khatri-rao, which may exceed the sketched dimensions.
    #[arg(long)]
    pub kr_m_max: Option<usize>,
    /// Full-width merges in the tn embedding.
    #[arg(long)]
    pub strict_accuracy: bool,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Data contraction tree (nested pairs of vertex names).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long)]
    pub m: usize,
    /// Full-width merges in the tn embedding.
    #[arg(long)]
    pub strict_accuracy: bool,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub tree: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tn")]
    pub embedding: EmbeddingChoice,
    #[arg(long)]
    pub m: usize,
    /// Where to write the flop ledger (default: stdout).
    #[arg(long)]
    pub ledger: Option<PathBuf>,
    /// Full-width merges in the tn embedding.
    #[arg(long)]
    pub strict_accuracy: bool,
}

#[derive(Debug, Args)]
pub struct CpArgs {
    #[arg(long, default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value_t = 20)]
    pub size: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long)]
    pub target_rank: Option<usize>,
    #[arg(long, conflicts_with_all = ["epsilon", "delta", "constant"])]
    pub sketch_size: Option<usize>,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub constant: f64,
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Also run unsketched ALS from the same start.
    #[arg(long)]
    pub reference: bool,
    /// CSV residual trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TtArgs {
    #[arg(long, default_value_t = 8)]
    pub order: usize,
    #[arg(long, default_value_t = 40)]
    pub size: usize,
    #[arg(long, default_value_t = 10)]
    pub rank: usize,
    #[arg(long, default_value_t = 6)]
    pub sketch_size: usize,
    /// CSV per-core trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            Ok(())
        }
    }
}

fn with_extension(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

/// Run a parsed command. Returns the exit code on success.
pub fn execute(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        // a second build in the same process fails harmlessly
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Accuracy(a) => {
            let input = match a.input {
                InputArg::Kronecker => InputKind::Kronecker,
                InputArg::TensorTrain => InputKind::TensorTrain,
                InputArg::File => InputKind::File(
                    a.network.ok_or_else(|| Error::InvalidArgument("--input file needs --network".into()))?,
                ),
            };
            let cfg = AccuracyConfig {
                input,
                order: a.order,
                size: a.size,
                rank: a.rank,
                embeddings: a.embedding,
                tau: a.tau,
                trials: a.trials,
                repeats: a.repeats,
                seed: cli.seed,
                m_min: a.m_min,
                m_max: a.m_max,
                kr_m_max: a.kr_m_max,
                strict: a.strict_accuracy,
            };
            let (rows, grid) = run_accuracy(&cfg)?;
            write_csv(&rows, output(out)?)?;
            let meta = serde_json::json!({ "config": cfg, "grid": grid });
            eprintln!("{meta}");
            if let Some(p) = out {
                write_json(&with_extension(p, ".meta.json"), &meta)?;
            }
            Ok(if rows.iter().any(|r| r.smallest_m.is_none()) { EXIT_NOT_FOUND } else { EXIT_OK })
        }
        Command::Cost(a) => {
            let loaded = load_network(&a.network)?;
            let tree = a.tree.as_deref().map(|p| load_tree(p, &loaded.network)).transpose()?;
            emit_json(out, &cmd_cost(&loaded, tree, a.m, a.strict_accuracy)?)?;
            Ok(EXIT_OK)
        }
        Command::Sketch(a) => {
            let loaded = load_network(&a.network)?;
            let tree = a.tree.as_deref().map(|p| load_tree(p, &loaded.network)).transpose()?;
            let (file, ledger) = cmd_sketch(&loaded, a.embedding, a.m, cli.seed, tree, a.strict_accuracy)?;
            let target = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("sketch.json"));
            write_json(&target, &file)?;
            emit_json(a.ledger.as_deref(), &ledger)?;
            Ok(EXIT_OK)
        }
        Command::CpAls(a) => {
            let cfg = CpConfig {
                order: a.order,
                size: a.size,
                rank: a.rank,
                target_rank: a.target_rank,
                sketch_size: a.sketch_size,
                epsilon: a.epsilon,
                delta: a.delta,
                constant: a.constant,
                iters: a.iters,
                noise: a.noise,
                seed: cli.seed,
                reference: a.reference,
            };
            let res = cmd_cp_als(&cfg)?;
            if let Some(p) = &a.trace {
                write_cp_trace(&res, File::create(p)?)?;
            }
            emit_json(out, &res)?;
            Ok(EXIT_OK)
        }
        Command::TtRound(a) => {
            let cfg =
                TtConfig { order: a.order, size: a.size, rank: a.rank, sketch_size: a.sketch_size, seed: cli.seed };
            let res = cmd_tt_round(&cfg)?;
            if let Some(p) = &a.trace {
                write_tt_trace(&res, File::create(p)?)?;
            }
            emit_json(out, &res)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parse arguments and run. Usage and runtime errors exit with 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
