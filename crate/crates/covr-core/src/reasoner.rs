//! Query-side pipeline: (reference video, edit) -> reasoning trace ->
//! hypothetical target description -> pooled, normalized query embedding.
//!
//! The trace conditions the target generation and is never embedded itself;
//! only the generated target description's tokens are pooled. The iterative
//! variant re-prompts the backend with the previous trace for a fixed number
//! of rounds and uses the final consolidated trace.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, LmmBackend, SamplingParams};
use crate::model::{parse_trace, EditText, ReasoningRecord, TraceDiagnostic, VideoRef};
use crate::pooling::{l2_normalize, pool, EmbeddingVector, PoolError, PoolingKind, PoolingStrategy};

#[derive(Debug, thiserror::Error)]
pub enum ReasonerError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error("reasoning trace unparseable: {summary}")]
    TraceUnparseable { summary: String },
}

/// Knobs for one query encoding.
#[derive(Debug, Clone, Copy)]
pub struct ReasonerOptions {
    pub trace_params: SamplingParams,
    pub target_params: SamplingParams,
    /// Hard-fail on a trace that parses to zero assertions. When false the
    /// pipeline degrades to an empty trace and records a warning.
    pub strict: bool,
}

impl Default for ReasonerOptions {
    fn default() -> Self {
        Self {
            trace_params: SamplingParams::trace_defaults(),
            target_params: SamplingParams::target_defaults(),
            strict: false,
        }
    }
}

/// Everything one query encoding produced, for scoring and audit logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryArtifacts {
    pub trace: ReasoningRecord,
    /// Canonical effect-query text of `trace`.
    pub trace_text: String,
    pub target_description: String,
    pub query_embedding: EmbeddingVector,
    pub refinement_rounds: u32,
    pub strategy: PoolingKind,
    pub backend_meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Single-pass query encoding with after-effect reasoning.
pub fn encode_query(
    reference: &VideoRef,
    edit: &EditText,
    backend: &dyn LmmBackend,
    strategy: &PoolingStrategy,
    options: &ReasonerOptions,
) -> Result<QueryArtifacts, ReasonerError> {
    let generation = backend.reason_after_effects(reference, edit, &options.trace_params)?;
    let (trace, warnings) = parse_and_clean(&generation.text, options.strict)?;
    finish_query(reference, edit, backend, strategy, options, trace, 0, warnings)
}

/// Ablation variant: no reasoning step. The target description is generated
/// with an empty trace placeholder; everything downstream is identical.
pub fn encode_query_no_reasoning(
    reference: &VideoRef,
    edit: &EditText,
    backend: &dyn LmmBackend,
    strategy: &PoolingStrategy,
    options: &ReasonerOptions,
) -> Result<QueryArtifacts, ReasonerError> {
    let trace = ReasoningRecord::new();
    finish_query(reference, edit, backend, strategy, options, trace, 0, Vec::new())
}

/// Iterative variant: generate an initial trace, re-prompt `rounds` times
/// with the previous trace, then feed only the final trace to the target
/// step. Backend call count is 1 + rounds + 1.
pub fn encode_query_refined(
    reference: &VideoRef,
    edit: &EditText,
    backend: &dyn LmmBackend,
    strategy: &PoolingStrategy,
    options: &ReasonerOptions,
    rounds: u32,
) -> Result<QueryArtifacts, ReasonerError> {
    assert!(rounds >= 1, "refined encoding requires at least one round");
    let initial = backend.reason_after_effects(reference, edit, &options.trace_params)?;
    let mut current = initial.text;
    for _ in 0..rounds {
        let refined = backend.refine_trace(reference, edit, &current, &options.trace_params)?;
        current = refined.text;
    }
    let (trace, warnings) = parse_and_clean(&current, options.strict)?;
    finish_query(reference, edit, backend, strategy, options, trace, rounds, warnings)
}

fn parse_and_clean(
    raw: &str,
    strict: bool,
) -> Result<(ReasoningRecord, Vec<String>), ReasonerError> {
    let parsed = parse_trace(raw);
    let mut warnings: Vec<String> = parsed
        .diagnostics
        .iter()
        .map(TraceDiagnostic::to_string)
        .collect();
    if parsed.record.is_empty() && !parsed.diagnostics.is_empty() {
        if strict {
            return Err(ReasonerError::TraceUnparseable {
                summary: warnings.join("; "),
            });
        }
        warnings.push("trace unparseable; falling back to an empty trace".to_string());
    }
    Ok((parsed.record.canonicalize(), warnings))
}

#[allow(clippy::too_many_arguments)]
fn finish_query(
    reference: &VideoRef,
    edit: &EditText,
    backend: &dyn LmmBackend,
    strategy: &PoolingStrategy,
    options: &ReasonerOptions,
    trace: ReasoningRecord,
    refinement_rounds: u32,
    warnings: Vec<String>,
) -> Result<QueryArtifacts, ReasonerError> {
    let target =
        backend.generate_target_description(reference, edit, &trace, &options.target_params)?;
    let pooled = pool(&target.token_embeddings, strategy)?;
    let query_embedding = l2_normalize(&pooled)?;
    let trace_text = trace.render_effect_query().as_str().to_string();
    Ok(QueryArtifacts {
        trace,
        trace_text,
        target_description: target.text,
        query_embedding,
        refinement_rounds,
        strategy: strategy.kind(),
        backend_meta: target.backend_meta,
        warnings,
    })
}
