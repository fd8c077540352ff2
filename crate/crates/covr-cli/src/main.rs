//! `covr` — composed video retrieval from the command line: encode gallery
//! caches, run reasoned queries, evaluate triplet benchmarks, curate
//! candidate corpora.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ConfigOverrides, EngineConfig};

#[derive(Parser)]
#[command(name = "covr", version, about = "Zero-shot composed video retrieval engine")]
struct Cli {
    #[command(flatten)]
    overrides: ConfigOverrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe, pool, and cache embeddings for a gallery video list (JSONL).
    EncodeGallery {
        /// JSONL file with one {"id", "uri"?, "fps_hint"?} record per line.
        video_list: PathBuf,
        /// Output cache file.
        cache_out: PathBuf,
        /// Pooling strategy: weighted, mean, max, last, mean+last, mean+max.
        #[arg(long)]
        strategy: Option<String>,
        /// Exit 0 even when some videos failed to encode.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Encode one (reference, edit) query and rank the cached gallery.
    Query {
        cache: PathBuf,
        /// Reference video id (the locator defaults to the id).
        reference: String,
        /// Edit / modification text.
        edit: String,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Pooling strategy; must match the cache's strategy.
        #[arg(long)]
        strategy: Option<String>,
        /// Skip the after-effect reasoning step.
        #[arg(long)]
        no_reasoning: bool,
        /// Explicit locator for the reference video.
        #[arg(long)]
        reference_uri: Option<String>,
        /// Print the full audit record (trace, target description, meta).
        #[arg(short, long)]
        verbose: bool,
    },
    /// Run a triplet benchmark against a cached gallery and write a report.
    Evaluate {
        cache: PathBuf,
        /// JSONL triplet corpus.
        triplets: PathBuf,
        /// Report file (JSON) to write.
        report_out: PathBuf,
        /// Comma-separated pooling strategies to sweep (re-encodes the
        /// gallery per strategy). Defaults to the cache's strategy.
        #[arg(long = "strategy")]
        strategies: Option<String>,
        /// Comma-separated query variants: base, plus_r, refined.
        /// Defaults to "base,plus_r".
        #[arg(long)]
        variants: Option<String>,
        /// Judge traces: `mock` or `remote:<endpoint>,<model>`.
        #[arg(long)]
        judge: Option<String>,
        /// Skip triplets whose target is missing from the gallery.
        #[arg(long)]
        skip_missing: bool,
    },
    /// Apply the acceptance predicate to candidate triplets.
    Curate {
        /// JSONL candidate triplets with criteria flags.
        candidates: PathBuf,
        /// Accepted triplets (JSONL) output.
        accepted_out: PathBuf,
        /// Per-candidate audit log (JSONL) output.
        audit_out: PathBuf,
        /// Minimum satisfied criteria for acceptance (default 2).
        #[arg(long)]
        min_criteria: Option<u32>,
        /// Overlap threshold below which criterion (v) fires (default 0.3).
        #[arg(long)]
        overlap_threshold: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let config = EngineConfig::resolve(&cli.overrides)?;
    match &cli.command {
        Command::EncodeGallery {
            video_list,
            cache_out,
            strategy,
            allow_partial,
        } => {
            let mut config = config;
            config.override_strategy(strategy.as_deref())?;
            commands::cmd_encode_gallery(&config, video_list, cache_out, *allow_partial)
        }
        Command::Query {
            cache,
            reference,
            edit,
            top_k,
            strategy,
            no_reasoning,
            reference_uri,
            verbose,
        } => {
            let mut config = config;
            config.override_strategy(strategy.as_deref())?;
            commands::cmd_query(
                &config,
                cache,
                reference,
                edit,
                *top_k,
                *no_reasoning,
                reference_uri.as_deref(),
                *verbose,
            )
        }
        Command::Evaluate {
            cache,
            triplets,
            report_out,
            strategies,
            variants,
            judge,
            skip_missing,
        } => commands::cmd_evaluate(
            &config,
            cache,
            triplets,
            report_out,
            strategies.as_deref(),
            variants.as_deref(),
            judge.as_deref(),
            *skip_missing,
        ),
        Command::Curate {
            candidates,
            accepted_out,
            audit_out,
            min_criteria,
            overlap_threshold,
        } => commands::cmd_curate(
            candidates,
            accepted_out,
            audit_out,
            *min_criteria,
            *overlap_threshold,
        ),
    }
}
