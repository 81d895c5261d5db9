//! `medstyle`: terminology graph, pretraining data, parallel-pair mining and
//! evaluation for expert/layman medical text style transfer.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medstyle_core::Style;

use crate::commands::Failure;
use crate::config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(name = "medstyle", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print sentence, style and concept counts for a corpus.
    Stats(Common),
    /// Build the expert/layman terminology graph from an annotated corpus.
    BuildGraph(Common),
    /// Generate KBA, Mask, Switch and Delete pretraining data.
    GenData(GenDataArgs),
    /// Mine expert/layman sentence pairs by margin score.
    Mine(MineArgs),
    /// Compute automatic metrics, success rates and correlations.
    Evaluate(EvalArgs),
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Corpus JSONL file.
    #[arg(long, value_name = "PATH")]
    corpus: Option<PathBuf>,
    /// Terminology graph TSV file.
    #[arg(long, value_name = "PATH")]
    graph: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "RATE")]
    noise_rate: Option<f64>,
    #[arg(long, value_name = "N")]
    batch_size: Option<usize>,
    /// Skip knowledge-base assimilation pairs (no graph needed).
    #[arg(long)]
    no_kba: bool,
}

#[derive(Args, Debug)]
struct MineArgs {
    #[command(flatten)]
    common: Common,
    /// Neighbourhood size for the margin denominator.
    #[arg(long)]
    k: Option<usize>,
    /// Minimum margin for a pair to be kept.
    #[arg(long)]
    threshold: Option<f64>,
    /// Embed the corpus with the hashed n-gram toy embedder of this dimension.
    #[arg(long, value_name = "DIM")]
    toy_embed: Option<usize>,
    #[arg(long, value_name = "PATH")]
    expert_embeddings: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    layman_embeddings: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// System outputs, one sentence per line.
    #[arg(long, value_name = "PATH")]
    hypotheses: Option<PathBuf>,
    /// References, one sentence per line, aligned with the hypotheses.
    #[arg(long, value_name = "PATH")]
    references: Option<PathBuf>,
    /// Human ratings CSV.
    #[arg(long, value_name = "PATH")]
    ratings: Option<PathBuf>,
    /// Per-system metric table CSV for metric/human correlations.
    #[arg(long, value_name = "PATH")]
    systems: Option<PathBuf>,
    /// Style the hypotheses should be in.
    #[arg(long, value_name = "STYLE")]
    target_style: Option<Style>,
}

fn load_config(common: &Common) -> Result<PipelineConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| Failure::input("config", e))?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(threads) = common.threads {
        config.threads = threads;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(corpus) = &common.corpus {
        config.paths.corpus = Some(corpus.clone());
    }
    if let Some(graph) = &common.graph {
        config.paths.graph = Some(graph.clone());
    }
    Ok(config)
}

fn set_threads(threads: usize) -> Result<(), Failure> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::internal("threads", anyhow::Error::new(e)))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Stats(common) => {
            let config = load_config(&common)?;
            set_threads(config.threads)?;
            commands::stats(&config)
        }
        Command::BuildGraph(common) => {
            let config = load_config(&common)?;
            set_threads(config.threads)?;
            commands::build_graph(&config)
        }
        Command::GenData(args) => {
            let mut config = load_config(&args.common)?;
            if let Some(rate) = args.noise_rate {
                config.data.noise_rate = rate;
            }
            if let Some(size) = args.batch_size {
                config.data.batch_size = size;
            }
            if args.no_kba {
                config.data.kba = false;
            }
            set_threads(config.threads)?;
            commands::gen_data(&config)
        }
        Command::Mine(args) => {
            let mut config = load_config(&args.common)?;
            if let Some(k) = args.k {
                config.mining.k = k;
            }
            if let Some(t) = args.threshold {
                config.mining.threshold = t;
            }
            if args.toy_embed.is_some() {
                config.mining.toy_embed = args.toy_embed;
            }
            if args.expert_embeddings.is_some() {
                config.paths.expert_embeddings = args.expert_embeddings;
            }
            if args.layman_embeddings.is_some() {
                config.paths.layman_embeddings = args.layman_embeddings;
            }
            set_threads(config.threads)?;
            commands::mine(&config)
        }
        Command::Evaluate(args) => {
            let mut config = load_config(&args.common)?;
            let p = &mut config.paths;
            for (slot, flag) in [
                (&mut p.hypotheses, args.hypotheses),
                (&mut p.references, args.references),
                (&mut p.ratings, args.ratings),
                (&mut p.systems, args.systems),
            ] {
                if flag.is_some() {
                    *slot = flag;
                }
            }
            if args.target_style.is_some() {
                config.eval.target_style = args.target_style;
            }
            set_threads(config.threads)?;
            commands::evaluate(&config)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {:#}", f.stage, f.error);
            ExitCode::from(f.code)
        }
    }
}
