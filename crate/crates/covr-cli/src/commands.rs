//! The four operator commands: encode a gallery cache, run one composed
//! query, evaluate a triplet benchmark, and curate a candidate corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use covr_core::corpus::{read_triplets, read_video_list};
use covr_core::curation::{accept_triplet, CurationConfig};
use covr_core::eval::{
    run_benchmark, BenchmarkConfig, HttpJudge, JudgeClient, MockJudge, QueryVariant,
};
use covr_core::gallery::{
    encode_gallery, load_cache, save_cache, score, EncodeOptions, GalleryIndex,
};
use covr_core::model::{EditText, VideoRef};
use covr_core::pooling::PoolingKind;
use covr_core::reasoner::{encode_query, encode_query_no_reasoning, encode_query_refined};

use crate::config::EngineConfig;
use crate::report::{render_table, ReportFile, ReportSection};

/// Exit code for a partially produced artifact without a skip flag.
pub const EXIT_PARTIAL: i32 = 2;

pub fn cmd_encode_gallery(
    config: &EngineConfig,
    video_list: &Path,
    cache_out: &Path,
    allow_partial: bool,
) -> Result<i32> {
    let file = File::open(video_list)
        .with_context(|| format!("opening video list {}", video_list.display()))?;
    let (videos, diagnostics) = read_video_list(BufReader::new(file))?;
    for d in &diagnostics {
        eprintln!("video-list line {}: {}", d.line_no, d.error);
    }
    if videos.is_empty() {
        bail!("no videos parsed from {}", video_list.display());
    }

    let backend = config.build_backend()?;
    let strategy = config.build_strategy()?;
    let outcome = encode_gallery(
        &videos,
        backend.as_ref(),
        &strategy,
        EncodeOptions {
            sampling: config.sampling.describe,
            parallelism: config.parallelism,
        },
    )?;
    for failure in &outcome.failures {
        eprintln!("{}", serde_json::to_string(failure)?);
    }

    let mut writer = BufWriter::new(
        File::create(cache_out).with_context(|| format!("creating {}", cache_out.display()))?,
    );
    save_cache(&outcome.index, &mut writer)?;
    writer.flush()?;

    println!(
        "encoded {} videos (dim {}, strategy {}), {} failures -> {}",
        outcome.index.len(),
        outcome.index.dim(),
        outcome.index.strategy(),
        outcome.failures.len(),
        cache_out.display()
    );
    let partial = !outcome.failures.is_empty() || !diagnostics.is_empty();
    Ok(if partial && !allow_partial { EXIT_PARTIAL } else { 0 })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_query(
    config: &EngineConfig,
    cache: &Path,
    reference_id: &str,
    edit_text: &str,
    top_k: usize,
    no_reasoning: bool,
    reference_uri: Option<&str>,
    verbose: bool,
) -> Result<i32> {
    let index = load_index(cache)?;
    if config.strategy != index.strategy() {
        bail!(
            "pooling strategy mismatch: cache was built with '{}' but the config selects '{}'",
            index.strategy(),
            config.strategy
        );
    }
    let backend = config.build_backend()?;
    let handshake = backend.handshake().map_err(|e| anyhow::anyhow!("{e}"))?;
    let strategy = config.build_strategy()?;
    let expected_dim = strategy.output_dim(handshake.dim);
    if expected_dim != index.dim() {
        bail!(
            "dimension mismatch: backend pools to {} but cache holds dim {}",
            expected_dim,
            index.dim()
        );
    }

    let reference = VideoRef::new(reference_id, reference_uri.unwrap_or(reference_id))
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let edit = EditText::new(edit_text).map_err(|e| anyhow::anyhow!("{e}"))?;
    let options = config.reasoner_options();
    let artifacts = if no_reasoning {
        encode_query_no_reasoning(&reference, &edit, backend.as_ref(), &strategy, &options)?
    } else if config.refinement_rounds > 0 {
        encode_query_refined(
            &reference,
            &edit,
            backend.as_ref(),
            &strategy,
            &options,
            config.refinement_rounds,
        )?
    } else {
        encode_query(&reference, &edit, backend.as_ref(), &strategy, &options)?
    };
    for warning in &artifacts.warnings {
        eprintln!("warning: {warning}");
    }

    let ranked = score(&artifacts.query_embedding, &index)?;
    for (i, entry) in ranked.top(top_k).iter().enumerate() {
        println!("{:>4}  {:<24} {:.6}", i + 1, entry.video_id, entry.score);
    }
    if verbose {
        println!("--- audit record ---");
        println!("{}", serde_json::to_string_pretty(&artifacts)?);
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    config: &EngineConfig,
    cache: &Path,
    triplets_path: &Path,
    report_out: &Path,
    strategies_flag: Option<&str>,
    variants_flag: Option<&str>,
    judge_flag: Option<&str>,
    skip_missing: bool,
) -> Result<i32> {
    let cached = load_index(cache)?;
    let file = File::open(triplets_path)
        .with_context(|| format!("opening triplets {}", triplets_path.display()))?;
    let (triplets, diagnostics) = read_triplets(BufReader::new(file))?;
    for d in &diagnostics {
        eprintln!("triplets line {}: {}", d.line_no, d.error);
    }
    if triplets.is_empty() {
        bail!("no triplets parsed from {}", triplets_path.display());
    }

    let backend = config.build_backend()?;
    let strategies: Vec<PoolingKind> = match strategies_flag {
        Some(list) => list
            .split(',')
            .map(|s| s.parse::<PoolingKind>().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?,
        None => vec![cached.strategy()],
    };
    let variants: Vec<QueryVariant> = match variants_flag {
        Some(list) => list
            .split(',')
            .map(|v| parse_variant(v, config))
            .collect::<Result<_>>()?,
        None => vec![QueryVariant::Base, QueryVariant::PlusR],
    };
    let judge: Option<Box<dyn JudgeClient>> = match judge_flag {
        None => None,
        Some(j) => Some(build_judge(j)?),
    };

    let mut sections = Vec::new();
    for kind in &strategies {
        let strategy = config.build_strategy_for(*kind)?;
        let index = if *kind == cached.strategy() {
            cached.clone()
        } else {
            // A cache stores pooled vectors for one strategy only; sweeping
            // another strategy re-encodes the same gallery videos.
            let videos: Vec<VideoRef> = cached
                .entries()
                .iter()
                .map(|e| e.video.clone())
                .collect();
            let outcome = encode_gallery(
                &videos,
                backend.as_ref(),
                &strategy,
                EncodeOptions {
                    sampling: config.sampling.describe,
                    parallelism: config.parallelism,
                },
            )?;
            for failure in &outcome.failures {
                eprintln!("re-encode ({kind}): {}", serde_json::to_string(failure)?);
            }
            outcome.index
        };
        for variant in &variants {
            let outcome = run_benchmark(
                &triplets,
                &index,
                backend.as_ref(),
                &BenchmarkConfig {
                    variant: *variant,
                    strategy: &strategy,
                    reasoner: config.reasoner_options(),
                    judge: judge.as_deref(),
                    skip_missing,
                },
            )?;
            let mut echoed = config.clone();
            echoed.strategy = *kind;
            sections.push(ReportSection {
                variant: variant.label(),
                strategy: *kind,
                config: echoed,
                report: outcome.report,
                reasoning: outcome.reasoning,
                skipped_missing: outcome.skipped_missing,
                judged: outcome.judged,
                skipped_judging: outcome.skipped_judging,
            });
        }
    }

    let report = ReportFile { sections };
    let mut writer = BufWriter::new(
        File::create(report_out).with_context(|| format!("creating {}", report_out.display()))?,
    );
    serde_json::to_writer_pretty(&mut writer, &report)?;
    writer.write_all(b"\n")?;
    writer.flush()?;

    print!("{}", render_table(&report.sections));
    println!("report -> {}", report_out.display());
    let partial = !diagnostics.is_empty()
        || report.sections.iter().any(|s| !s.skipped_missing.is_empty());
    Ok(if partial && !skip_missing { EXIT_PARTIAL } else { 0 })
}

fn parse_variant(label: &str, config: &EngineConfig) -> Result<QueryVariant> {
    match label.trim().to_ascii_lowercase().as_str() {
        "base" | "no_reasoning" => Ok(QueryVariant::Base),
        "plus_r" | "reasoning" => Ok(QueryVariant::PlusR),
        "refined" => {
            if config.refinement_rounds == 0 {
                bail!("variant 'refined' needs --refine N (or refinement_rounds in the config)");
            }
            Ok(QueryVariant::Refined {
                rounds: config.refinement_rounds,
            })
        }
        other => bail!("unknown variant '{other}' (expected base, plus_r, refined)"),
    }
}

fn build_judge(flag: &str) -> Result<Box<dyn JudgeClient>> {
    if flag == "mock" {
        return Ok(Box::new(MockJudge));
    }
    if let Some(rest) = flag.strip_prefix("remote:") {
        let (endpoint, model) = rest
            .split_once(',')
            .context("remote judge flag needs `remote:<endpoint>,<model>`")?;
        let judge = HttpJudge::new(covr_core::backend::RemoteConfig {
            endpoint: endpoint.to_string(),
            model: model.to_string(),
            auth_env: "COVR_JUDGE_TOKEN".to_string(),
            layer_selector: "final".to_string(),
            embed_endpoint: None,
            timeout_secs: 120,
        })
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        return Ok(Box::new(judge));
    }
    bail!("unknown judge '{flag}' (expected mock or remote:<endpoint>,<model>)")
}

#[derive(Serialize)]
struct AuditRecord<'a> {
    id: &'a str,
    accepted: bool,
    satisfied: Vec<&'static str>,
    criteria_count: usize,
}

pub fn cmd_curate(
    candidates_path: &Path,
    accepted_out: &Path,
    audit_out: &Path,
    min_criteria: Option<u32>,
    overlap_threshold: Option<f64>,
) -> Result<i32> {
    let file = File::open(candidates_path)
        .with_context(|| format!("opening candidates {}", candidates_path.display()))?;
    let (candidates, diagnostics) = read_triplets(BufReader::new(file))?;
    for d in &diagnostics {
        eprintln!("candidates line {}: {}", d.line_no, d.error);
    }
    if candidates.is_empty() {
        eprintln!("no candidates");
        return Ok(1);
    }

    let mut config = CurationConfig::default();
    if let Some(m) = min_criteria {
        config.min_criteria = m;
    }
    if let Some(t) = overlap_threshold {
        config.overlap_threshold = t;
    }

    let mut accepted_writer = BufWriter::new(
        File::create(accepted_out)
            .with_context(|| format!("creating {}", accepted_out.display()))?,
    );
    let mut audit_writer = BufWriter::new(
        File::create(audit_out).with_context(|| format!("creating {}", audit_out.display()))?,
    );
    let mut accepted_count = 0usize;
    for candidate in &candidates {
        let decision = accept_triplet(&candidate.criteria_flags, &config);
        let audit = AuditRecord {
            id: &candidate.id,
            accepted: decision.accepted,
            satisfied: decision.satisfied.iter().map(|c| c.label()).collect(),
            criteria_count: decision.satisfied.len(),
        };
        serde_json::to_writer(&mut audit_writer, &audit)?;
        audit_writer.write_all(b"\n")?;
        if decision.accepted {
            serde_json::to_writer(&mut accepted_writer, candidate)?;
            accepted_writer.write_all(b"\n")?;
            accepted_count += 1;
        }
    }
    accepted_writer.flush()?;
    audit_writer.flush()?;

    println!(
        "curated {} candidates: {} accepted, {} rejected (min_criteria {}, overlap_threshold {}), {} parse failures",
        candidates.len(),
        accepted_count,
        candidates.len() - accepted_count,
        config.min_criteria,
        config.overlap_threshold,
        diagnostics.len()
    );
    Ok(0)
}

fn load_index(cache: &Path) -> Result<GalleryIndex> {
    let mut reader = BufReader::new(
        File::open(cache).with_context(|| format!("opening cache {}", cache.display()))?,
    );
    load_cache(&mut reader, None).map_err(|e| anyhow::anyhow!("{e}"))
}
