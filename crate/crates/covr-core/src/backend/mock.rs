//! Deterministic mock backend.
//!
//! Given a seed, each token's vector is produced by a keyed pseudo-random
//! generator over (seed, token string, position) and scaled to unit norm.
//! Descriptions, traces, and target descriptions come from a fixture table
//! keyed by video id or (video id, edit hash). The mock is a pure function
//! of (seed, inputs): serialized outputs are byte-identical across
//! processes, which makes it the oracle for every end-to-end pipeline test.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::{EditText, ReasoningRecord, VideoRef};
use crate::pooling::TokenEmbeddingSequence;

use super::{
    BackendError, GenerationResult, Handshake, LmmBackend, SamplingParams,
};

/// FNV-1a 64-bit hash; stable across processes and platforms.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The normative mock embedding: a unit-norm vector keyed by
/// (seed, token, position).
pub fn token_vector(seed: u64, token: &str, position: usize, dim: usize) -> Vec<f64> {
    let mut key = Vec::with_capacity(token.len() + 16);
    key.extend_from_slice(&seed.to_le_bytes());
    key.extend_from_slice(token.as_bytes());
    key.extend_from_slice(&(position as u64).to_le_bytes());
    let mut state = fnv1a64(&key);
    let mut values: Vec<f64> = (0..dim)
        .map(|_| {
            let bits = splitmix64(&mut state);
            // 53 random mantissa bits mapped to [-1, 1).
            ((bits >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect();
    let norm = values.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        values[0] = 1.0;
    } else {
        for x in &mut values {
            *x /= norm;
        }
    }
    values
}

/// Which generation operation a recorded call was.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CallKind {
    Describe,
    Reason,
    Refine,
    Target,
}

/// Fixture table loaded from JSON. Description and target texts are
/// normalized to the mock's detokenized form (single-space joined) on
/// ingestion so tokens reconstruct the text exactly. Trace texts keep their
/// line structure: the token view of a trace is whitespace-flattened and
/// reconstructs the text only up to whitespace, which is fine because trace
/// tokens are never pooled.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockFixtures {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub descriptions: BTreeMap<String, String>,
    #[serde(default)]
    pub traces: Vec<TraceFixture>,
    #[serde(default)]
    pub targets: Vec<TargetFixture>,
    #[serde(default)]
    pub refinements: Vec<RefinementFixture>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceFixture {
    pub video: String,
    pub edit: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetFixture {
    pub video: String,
    pub edit: String,
    pub text: String,
    /// When set, this fixture only applies if the query-side trace renders
    /// to exactly this text (lets tests distinguish base vs. reasoning runs).
    #[serde(default)]
    pub trace: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementFixture {
    pub video: String,
    pub edit: String,
    /// The trace text the backend was re-prompted with.
    pub previous: String,
    /// The refined trace it answers.
    pub next: String,
}

pub struct MockBackend {
    seed: u64,
    dim: usize,
    layer_selector: String,
    descriptions: HashMap<String, String>,
    traces: HashMap<(String, u64), String>,
    targets: HashMap<(String, u64), String>,
    targets_by_trace: HashMap<(String, u64, u64), String>,
    refinement_steps: HashMap<(String, u64, u64), String>,
    calls: Mutex<Vec<CallKind>>,
}

impl MockBackend {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            dim: 8,
            layer_selector: "final".to_string(),
            descriptions: HashMap::new(),
            traces: HashMap::new(),
            targets: HashMap::new(),
            targets_by_trace: HashMap::new(),
            refinement_steps: HashMap::new(),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn from_fixtures(fixtures: MockFixtures, seed: u64) -> Self {
        let mut mock = Self::new(seed);
        if let Some(dim) = fixtures.dim {
            mock.dim = dim;
        }
        for (id, text) in fixtures.descriptions {
            mock = mock.with_description(&id, &text);
        }
        for t in fixtures.traces {
            mock = mock.with_trace(&t.video, &t.edit, &t.text);
        }
        for t in fixtures.targets {
            mock = match t.trace {
                Some(trace) => mock.with_target_for_trace(&t.video, &t.edit, &trace, &t.text),
                None => mock.with_target(&t.video, &t.edit, &t.text),
            };
        }
        for r in fixtures.refinements {
            mock = mock.with_refinement_step(&r.video, &r.edit, &r.previous, &r.next);
        }
        mock
    }

    pub fn from_fixture_json(json: &str, seed: u64) -> Result<Self, BackendError> {
        let fixtures: MockFixtures = serde_json::from_str(json)
            .map_err(|e| BackendError::Wire(format!("bad fixture file: {e}")))?;
        Ok(Self::from_fixtures(fixtures, seed))
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_layer_selector(mut self, layer: &str) -> Self {
        self.layer_selector = layer.to_string();
        self
    }

    pub fn with_description(mut self, video_id: &str, text: &str) -> Self {
        self.descriptions
            .insert(video_id.to_string(), normalize(text));
        self
    }

    pub fn with_trace(mut self, video_id: &str, edit: &str, text: &str) -> Self {
        self.traces
            .insert((video_id.to_string(), edit_hash(edit)), text.to_string());
        self
    }

    pub fn with_target(mut self, video_id: &str, edit: &str, text: &str) -> Self {
        self.targets
            .insert((video_id.to_string(), edit_hash(edit)), normalize(text));
        self
    }

    /// Registers a target description that applies only when the rendered
    /// trace matches `trace_text` exactly.
    pub fn with_target_for_trace(
        mut self,
        video_id: &str,
        edit: &str,
        trace_text: &str,
        text: &str,
    ) -> Self {
        self.targets_by_trace.insert(
            (
                video_id.to_string(),
                edit_hash(edit),
                fnv1a64(trace_text.as_bytes()),
            ),
            normalize(text),
        );
        self
    }

    /// Scripts one refinement transition: re-prompting with `previous`
    /// yields `next`. Unscripted refinements echo the previous trace.
    pub fn with_refinement_step(
        mut self,
        video_id: &str,
        edit: &str,
        previous: &str,
        next: &str,
    ) -> Self {
        self.refinement_steps.insert(
            (
                video_id.to_string(),
                edit_hash(edit),
                fnv1a64(previous.as_bytes()),
            ),
            next.to_string(),
        );
        self
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }

    pub fn calls_of(&self, kind: CallKind) -> usize {
        self.calls.lock().unwrap().iter().filter(|&&k| k == kind).count()
    }

    pub fn reset_calls(&self) {
        self.calls.lock().unwrap().clear();
    }

    fn record_call(&self, kind: CallKind) {
        self.calls.lock().unwrap().push(kind);
    }

    fn require_video(&self, video: &VideoRef) -> Result<(), BackendError> {
        if self.descriptions.contains_key(&video.id) {
            Ok(())
        } else {
            Err(BackendError::VideoUnreadable {
                id: video.id.clone(),
            })
        }
    }

    /// Embeds text exactly as the mock tokenizer sees it: whitespace-split
    /// tokens, truncated to `max_tokens`, each mapped through the keyed
    /// generator. Returns the normalized text that the tokens reconstruct.
    fn embed(&self, text: &str, max_tokens: u32) -> (String, TokenEmbeddingSequence) {
        let mut tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        if tokens.is_empty() {
            tokens.push("empty".to_string());
        }
        tokens.truncate(max_tokens.max(1) as usize);
        let vectors: Vec<Vec<f64>> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| token_vector(self.seed, t, i, self.dim))
            .collect();
        let normalized_text = tokens.join(" ");
        let seq = TokenEmbeddingSequence::new(tokens, vectors)
            .expect("mock sequences are non-empty and rectangular");
        (normalized_text, seq)
    }

    fn meta(&self, prompt: &str) -> BTreeMap<String, String> {
        let mut meta = BTreeMap::new();
        meta.insert("model_id".into(), "mock-v1".into());
        meta.insert("layer_selector".into(), self.layer_selector.clone());
        meta.insert("seed".into(), self.seed.to_string());
        meta.insert("frame_sampling_fps".into(), "1".into());
        meta.insert("prompt".into(), prompt.into());
        meta
    }

    fn result(&self, text: &str, params: &SamplingParams, prompt: &str) -> GenerationResult {
        let (text, token_embeddings) = self.embed(text, params.max_tokens);
        GenerationResult {
            text,
            token_embeddings,
            backend_meta: self.meta(prompt),
        }
    }
}

fn edit_hash(edit: &str) -> u64 {
    fnv1a64(edit.as_bytes())
}

fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl LmmBackend for MockBackend {
    fn handshake(&self) -> Result<Handshake, BackendError> {
        Ok(Handshake {
            dim: self.dim,
            model_id: "mock-v1".to_string(),
            layer_selector: self.layer_selector.clone(),
        })
    }

    fn describe_video(
        &self,
        video: &VideoRef,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        self.require_video(video)?;
        self.record_call(CallKind::Describe);
        let text = self.descriptions[&video.id].clone();
        Ok(self.result(&text, params, "describe_video"))
    }

    fn reason_after_effects(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        self.require_video(reference)?;
        self.record_call(CallKind::Reason);
        let key = (reference.id.clone(), edit_hash(edit.as_str()));
        let text = self.traces.get(&key).cloned().unwrap_or_default();
        // Trace text keeps its line structure; only the embedding view is
        // whitespace-tokenized.
        let (_, token_embeddings) = self.embed(&text, params.max_tokens);
        Ok(GenerationResult {
            text,
            token_embeddings,
            backend_meta: self.meta("reason_after_effects"),
        })
    }

    fn refine_trace(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        previous_trace: &str,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        self.require_video(reference)?;
        self.record_call(CallKind::Refine);
        let key = (
            reference.id.clone(),
            edit_hash(edit.as_str()),
            fnv1a64(previous_trace.as_bytes()),
        );
        let text = self
            .refinement_steps
            .get(&key)
            .cloned()
            .unwrap_or_else(|| previous_trace.to_string());
        let (_, token_embeddings) = self.embed(&text, params.max_tokens);
        Ok(GenerationResult {
            text,
            token_embeddings,
            backend_meta: self.meta("refine_trace"),
        })
    }

    fn generate_target_description(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        trace: &ReasoningRecord,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        self.require_video(reference)?;
        self.record_call(CallKind::Target);
        let eh = edit_hash(edit.as_str());
        let trace_text = trace.render_effect_query();
        let by_trace_key = (
            reference.id.clone(),
            eh,
            fnv1a64(trace_text.as_str().as_bytes()),
        );
        let text = self
            .targets_by_trace
            .get(&by_trace_key)
            .or_else(|| self.targets.get(&(reference.id.clone(), eh)))
            .cloned()
            .unwrap_or_else(|| {
                // Deterministic fallback so unscripted pipelines stay total.
                format!("{} {}", self.descriptions[&reference.id], edit.as_str())
            });
        Ok(self.result(&text, params, "generate_target_description"))
    }
}
