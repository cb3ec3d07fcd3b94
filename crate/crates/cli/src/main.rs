use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use verbacode::convert::{mds_domain, reuters_nltk};
use verbacode::experiment::{cmd_bench, cmd_reuse, cmd_run, Manifest};
use verbacode::features::FeatureSpace;
use verbacode::synth::{sentiment_domains, topic_corpus, SentimentParams, TopicCorpusParams};
use verbacode_server::{serve, ServerConfig};

/// Interactive learning for coding open-ended survey answers.
#[derive(Debug, Parser)]
#[command(name = "verbacode", version)]
struct Cli {
    /// Worker threads for experiment runs (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment matrix from a TOML config.
    Run { config: PathBuf },
    /// Run the classifier reuse study from a TOML config.
    Reuse { config: PathBuf },
    /// Time single iterations of the interactive loop.
    Bench {
        /// JSONL corpora to benchmark.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Validations per run.
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Serve the interactive coding API.
    Serve {
        /// JSONL corpora offered to sessions.
        #[arg(long = "corpus", required = true)]
        corpora: Vec<PathBuf>,
        /// Warm-start model JSON (one model, or a map from code to model).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Directory for session event logs; sessions are replayed from it on start.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Directory of static files served next to the API.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Report pooled F1 against the corpus labels.
        #[arg(long)]
        demo: bool,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Convert a public corpus layout to JSONL.
    #[command(subcommand)]
    Convert(Convert),
    /// Write synthetic stand-in corpora.
    #[command(subcommand)]
    Synth(Synth),
}

#[derive(Debug, Args)]
struct SpaceArgs {
    /// Hashed feature space size (a power of two).
    #[arg(long, default_value_t = 1 << 18)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    hash_seed: u32,
}

impl SpaceArgs {
    fn space(&self) -> Result<FeatureSpace> {
        Ok(FeatureSpace::new(self.dim, self.hash_seed)?)
    }
}

#[derive(Debug, Subcommand)]
enum Convert {
    /// NLTK `reuters` directory (cats.txt, training/, test/).
    Reuters {
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Keep this many most frequent categories.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// One multi-domain sentiment directory (positive.review, negative.review).
    Mds {
        dir: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum Synth {
    /// Multi-label newswire-like corpus.
    Newswire {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_788)]
        docs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One polarity corpus per product domain, written to `<dir>/<domain>.jsonl`.
    Sentiment {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        docs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Run { config } => report(cmd_run(&config).with_context(|| format!("run {}", config.display()))?),
        Command::Reuse { config } => report(cmd_reuse(&config).with_context(|| format!("reuse {}", config.display()))?),
        Command::Bench {
            corpora,
            out,
            trials,
            budget,
            seed,
            space,
        } => {
            let r = cmd_bench(&corpora, &out, trials, budget, space.space()?, seed)?;
            println!("{:<24} {:>8} {:>12} {:>12} {:>12} {:>8}", "corpus", "items", "max_s", "mean_s", "p99_s", "f1");
            for row in &r.rows {
                println!(
                    "{:<24} {:>8} {:>12.6} {:>12.6} {:>12.6} {:>8.4}",
                    row.corpus,
                    row.n_items,
                    row.timing.max_seconds,
                    row.timing.mean_seconds,
                    row.timing.p99_seconds,
                    row.final_f1
                );
            }
            println!("{} threads on {}; report in {}", r.machine.worker_threads, r.machine.os, out.display());
            Ok(())
        }
        Command::Serve {
            corpora,
            model,
            port,
            host,
            data_dir,
            static_dir,
            demo,
            space,
        } => {
            let config = ServerConfig {
                corpora,
                model,
                data_dir,
                static_dir,
                demo,
                space: space.space()?,
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(config, SocketAddr::new(host, port)))?;
            Ok(())
        }
        Command::Convert(Convert::Reuters { dir, out, top }) => {
            let c = reuters_nltk(&dir, top)?;
            c.write_jsonl(&out)?;
            println!("{} items, codes {:?} -> {}", c.len(), c.codeframe, out.display());
            Ok(())
        }
        Command::Convert(Convert::Mds { dir, out }) => {
            let c = mds_domain(&dir)?;
            c.write_jsonl(&out)?;
            println!("{} items -> {}", c.len(), out.display());
            Ok(())
        }
        Command::Synth(Synth::Newswire { out, docs, seed }) => {
            let params = TopicCorpusParams {
                n_docs: docs,
                ..TopicCorpusParams::default()
            };
            let c = topic_corpus(&params, seed)?;
            c.write_jsonl(&out)?;
            println!("{} items, codes {:?} -> {}", c.len(), c.codeframe, out.display());
            Ok(())
        }
        Command::Synth(Synth::Sentiment { out, docs, seed }) => {
            let params = SentimentParams {
                docs_per_domain: docs,
                ..SentimentParams::default()
            };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for c in sentiment_domains(&params, seed)? {
                let path = out.join(format!("{}.jsonl", c.name));
                c.write_jsonl(&path)?;
                println!("{} items -> {}", c.len(), path.display());
            }
            Ok(())
        }
    }
}

fn report(m: Manifest) -> Result<()> {
    println!("{}: {} artifacts, seeds {:?}", m.command, m.artifacts.len(), m.seeds);
    for a in &m.artifacts {
        println!("  {a}");
    }
    Ok(())
}
