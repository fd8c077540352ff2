//! The contract to a multimodal model backend: generate descriptions,
//! after-effect reasoning traces, and target descriptions, returning
//! per-token hidden-state vectors alongside the text.
//!
//! Two implementations ship here: a deterministic mock used as the test
//! oracle for every end-to-end pipeline test, and an HTTP adapter speaking a
//! chat-completions-style wire contract for hosted models.

mod http;
mod mock;

pub use http::{
    ChatMessage, ContentPart, EmbedRequest, EmbedResponse, GenerationRequest,
    GenerationResponse, HandshakeResponse, HttpBackend, RemoteConfig,
};
pub use mock::{fnv1a64, token_vector, CallKind, MockBackend, MockFixtures};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{EditText, ReasoningRecord, VideoRef};
use crate::pooling::TokenEmbeddingSequence;

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("video '{id}' cannot be read by the backend")]
    VideoUnreadable { id: String },
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid prompt template: {0}")]
    InvalidPrompt(String),
    #[error("invalid sampling params: {0}")]
    InvalidParams(String),
    #[error("wire contract violation: {0}")]
    Wire(String),
}

/// Decoding controls for one generation call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
}

impl SamplingParams {
    pub fn new(temperature: f64, top_p: f64, max_tokens: u32) -> Result<Self, BackendError> {
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(BackendError::InvalidParams(format!(
                "temperature must be >= 0, got {temperature}"
            )));
        }
        if !(top_p > 0.0 && top_p <= 1.0) {
            return Err(BackendError::InvalidParams(format!(
                "top_p must lie in (0, 1], got {top_p}"
            )));
        }
        if max_tokens == 0 {
            return Err(BackendError::InvalidParams("max_tokens must be positive".into()));
        }
        Ok(Self {
            temperature,
            top_p,
            max_tokens,
        })
    }

    /// Trace-generation defaults: temperature 0.8, top-p 0.9, 128 tokens.
    pub fn trace_defaults() -> Self {
        Self {
            temperature: 0.8,
            top_p: 0.9,
            max_tokens: 128,
        }
    }

    /// Target-description defaults: temperature 0.6, top-p 0.9, 256 tokens.
    /// top_p is carried over from the trace stage (assumption: only the
    /// temperature and token cap are prescribed for this stage).
    pub fn target_defaults() -> Self {
        Self {
            temperature: 0.6,
            top_p: 0.9,
            max_tokens: 256,
        }
    }

    /// Gallery-description defaults; mirrors the description stage.
    pub fn describe_defaults() -> Self {
        Self::target_defaults()
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }
}

/// Reasoning-trace verbosity preset. Each preset caps the trace-stage token
/// budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Minimal,
    Compact,
    #[default]
    Standard,
    Verbose,
}

impl Granularity {
    pub fn trace_token_budget(self) -> u32 {
        match self {
            Granularity::Minimal => 15,
            Granularity::Compact => 45,
            Granularity::Standard => 89,
            Granularity::Verbose => 186,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Granularity::Minimal => "minimal",
            Granularity::Compact => "compact",
            Granularity::Standard => "standard",
            Granularity::Verbose => "verbose",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "minimal" => Ok(Granularity::Minimal),
            "compact" => Ok(Granularity::Compact),
            "standard" => Ok(Granularity::Standard),
            "verbose" => Ok(Granularity::Verbose),
            other => Err(format!("unknown granularity '{other}'")),
        }
    }
}

/// What a backend reports about itself before any generation happens. The
/// dim governs every subsequent result; `layer_selector` names which hidden
/// layer the token embeddings come from ("final" or "penultimate"), since
/// either reading is honored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub dim: usize,
    pub model_id: String,
    pub layer_selector: String,
}

/// Text plus per-token hidden states plus provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub token_embeddings: TokenEmbeddingSequence,
    pub backend_meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptName {
    DescribeVideo,
    ReasonAfterEffects,
    GenerateTarget,
}

/// A named prompt with `{edit}` / `{trace}` placeholders.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub name: PromptName,
    pub template: String,
}

pub const DESCRIBE_VIDEO_PROMPT: &str = "Describe the content and actions in this video in detail.";

pub const REASON_AFTER_EFFECTS_PROMPT: &str = "Given this reference video and the edit instruction '{edit}', reason about what specific visual changes would occur. List the expected changes in: (1) object states, (2) actions or phases, (3) scene or background, (4) camera or framing, (5) tempo or pacing. Provide a structured reasoning trace.";

pub const GENERATE_TARGET_PROMPT: &str = "Based on the reference video, edit instruction '{edit}', and the reasoning trace, describe what the target video after the edit would look like.\n\nReasoning trace:\n{trace}";

impl PromptTemplate {
    pub fn builtin(name: PromptName) -> Self {
        let template = match name {
            PromptName::DescribeVideo => DESCRIBE_VIDEO_PROMPT,
            PromptName::ReasonAfterEffects => REASON_AFTER_EFFECTS_PROMPT,
            PromptName::GenerateTarget => GENERATE_TARGET_PROMPT,
        };
        Self {
            name,
            template: template.to_string(),
        }
    }

    /// Validates the placeholder contract: DescribeVideo takes none,
    /// ReasonAfterEffects requires `{edit}`, GenerateTarget requires both
    /// `{edit}` and `{trace}`.
    pub fn new(name: PromptName, template: impl Into<String>) -> Result<Self, BackendError> {
        let template = template.into();
        let has_edit = template.contains("{edit}");
        let has_trace = template.contains("{trace}");
        match name {
            PromptName::DescribeVideo => {
                if has_edit || has_trace {
                    return Err(BackendError::InvalidPrompt(
                        "DescribeVideo template must not carry placeholders".into(),
                    ));
                }
            }
            PromptName::ReasonAfterEffects => {
                if !has_edit {
                    return Err(BackendError::InvalidPrompt(
                        "ReasonAfterEffects template requires {edit}".into(),
                    ));
                }
            }
            PromptName::GenerateTarget => {
                if !has_edit || !has_trace {
                    return Err(BackendError::InvalidPrompt(
                        "GenerateTarget template requires {edit} and {trace}".into(),
                    ));
                }
            }
        }
        Ok(Self { name, template })
    }

    pub fn render(&self, edit: Option<&EditText>, trace: Option<&str>) -> Result<String, BackendError> {
        let mut out = self.template.clone();
        if out.contains("{edit}") {
            let edit = edit.ok_or_else(|| {
                BackendError::InvalidPrompt("template requires an edit".into())
            })?;
            out = out.replace("{edit}", edit.as_str());
        }
        if out.contains("{trace}") {
            let trace = trace.ok_or_else(|| {
                BackendError::InvalidPrompt("template requires a trace".into())
            })?;
            out = out.replace("{trace}", trace);
        }
        Ok(out)
    }
}

/// Refinement re-prompt used by the iterative variant. Not one of the three
/// named templates; kept verbatim so prompt audits can match on it.
pub fn refinement_prompt(previous_trace: &str) -> String {
    format!(
        "Here is your previous reasoning trace: {previous_trace}. Refine it: correct errors, remove redundancy, and keep at most four atomic assertions per slot."
    )
}

/// A multimodal backend able to describe videos and reason about edits,
/// returning per-token hidden states with each generation. Implementations
/// must be safe for concurrent request issuance.
pub trait LmmBackend: Send + Sync {
    fn handshake(&self) -> Result<Handshake, BackendError>;

    /// Generates the gallery description D(V). Frame sampling (1 fps) is the
    /// backend's duty and is declared in `backend_meta`.
    fn describe_video(
        &self,
        video: &VideoRef,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError>;

    /// Generates the after-effect reasoning trace for (reference, edit).
    fn reason_after_effects(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError>;

    /// Re-prompts with a previous trace and returns the refined trace.
    fn refine_trace(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        previous_trace: &str,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError>;

    /// Generates the hypothetical target description conditioned on
    /// (reference, edit, trace).
    fn generate_target_description(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        trace: &ReasoningRecord,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError>;
}
