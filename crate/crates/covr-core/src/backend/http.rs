//! HTTP adapter: a chat-completions-style wire contract for hosted models.
//!
//! Requests carry the rendered prompt, the video URI as a content part, the
//! sampling params, and `return_hidden_states` so capable backends can ship
//! per-token vectors inline. Backends that cannot return hidden states may
//! be paired with a separate text-embedding endpoint (the re-embed shim):
//! each generated token is embedded in a second call. Hidden states travel
//! as 32-bit floats.
//!
//! Endpoints, relative to the configured base URL:
//!   POST /handshake  { model, layer_selector }      -> { dim, model_id, layer_selector }
//!   POST /generate   GenerationRequest              -> GenerationResponse
//!   POST /embed      { model, input: [token, ...] } -> { embeddings: [[f32, ...], ...] }
//!
//! The bearer token is read from the environment variable named in the
//! config; unset means unauthenticated.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{EditText, ReasoningRecord, VideoRef};
use crate::pooling::TokenEmbeddingSequence;

use super::{
    refinement_prompt, BackendError, GenerationResult, Handshake, LmmBackend, PromptName,
    PromptTemplate, SamplingParams,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL, e.g. `http://localhost:8900/v1`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default = "default_auth_env")]
    pub auth_env: String,
    #[serde(default = "default_layer_selector")]
    pub layer_selector: String,
    /// Optional text-embedding endpoint for the re-embed shim.
    #[serde(default)]
    pub embed_endpoint: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_auth_env() -> String {
    "COVR_BACKEND_TOKEN".to_string()
}

fn default_layer_selector() -> String {
    "final".to_string()
}

fn default_timeout_secs() -> u64 {
    120
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text {
        text: String,
    },
    Video {
        uri: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fps_hint: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: Vec<ContentPart>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub return_hidden_states: bool,
    pub layer_selector: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    /// Surface tokens; may be absent for pure-text uses (e.g. judging).
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub hidden_states: Option<Vec<Vec<f32>>>,
    #[serde(default)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandshakeRequest {
    pub model: String,
    pub layer_selector: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HandshakeResponse {
    pub dim: usize,
    pub model_id: String,
    pub layer_selector: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model: String,
    pub input: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub embeddings: Vec<Vec<f32>>,
}

pub struct HttpBackend {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    auth_token: Option<String>,
    cached_handshake: Mutex<Option<Handshake>>,
}

impl HttpBackend {
    pub fn new(config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        let auth_token = std::env::var(&config.auth_env).ok();
        Ok(Self {
            config,
            client,
            auth_token,
            cached_handshake: Mutex::new(None),
        })
    }

    fn post_json<T: Serialize, R: for<'de> Deserialize<'de>>(
        &self,
        url: &str,
        body: &T,
    ) -> Result<R, BackendError> {
        let mut req = self.client.post(url).json(body);
        if let Some(token) = &self.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| BackendError::Unavailable(format!("{url}: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(BackendError::Unavailable(format!("{url}: {status} {text}")));
        }
        resp.json::<R>()
            .map_err(|e| BackendError::Wire(format!("{url}: bad response body: {e}")))
    }

    fn generate(
        &self,
        video: &VideoRef,
        prompt: String,
        params: &SamplingParams,
        stage: &str,
    ) -> Result<GenerationResult, BackendError> {
        let handshake = self.handshake()?;
        let request = GenerationRequest {
            model: self.config.model.clone(),
            messages: vec![ChatMessage {
                role: "user".to_string(),
                content: vec![
                    ContentPart::Video {
                        uri: video.uri.clone(),
                        fps_hint: video.fps_hint,
                    },
                    ContentPart::Text {
                        text: prompt.clone(),
                    },
                ],
            }],
            temperature: params.temperature,
            top_p: params.top_p,
            max_tokens: params.max_tokens,
            return_hidden_states: true,
            layer_selector: self.config.layer_selector.clone(),
        };
        let url = format!("{}/generate", self.config.endpoint.trim_end_matches('/'));
        let response: GenerationResponse = self.post_json(&url, &request)?;
        if response.tokens.is_empty() {
            return Err(BackendError::Wire("response carried no tokens".into()));
        }

        let hidden = match response.hidden_states {
            Some(h) => h,
            None => self.reembed(&response.tokens)?,
        };
        if hidden.len() != response.tokens.len() {
            return Err(BackendError::Wire(format!(
                "{} tokens but {} hidden-state rows",
                response.tokens.len(),
                hidden.len()
            )));
        }
        let vectors: Vec<Vec<f64>> = hidden
            .iter()
            .map(|row| row.iter().map(|&x| x as f64).collect())
            .collect();
        if let Some(row) = vectors.iter().find(|r| r.len() != handshake.dim) {
            return Err(BackendError::DimensionMismatch {
                expected: handshake.dim,
                actual: row.len(),
            });
        }
        let token_embeddings = TokenEmbeddingSequence::new(response.tokens, vectors)
            .map_err(|e| BackendError::Wire(e.to_string()))?;

        let mut backend_meta = BTreeMap::new();
        backend_meta.insert(
            "model_id".into(),
            response.model.unwrap_or_else(|| handshake.model_id.clone()),
        );
        backend_meta.insert("layer_selector".into(), handshake.layer_selector.clone());
        backend_meta.insert("frame_sampling_fps".into(), "1".into());
        backend_meta.insert("stage".into(), stage.into());
        Ok(GenerationResult {
            text: response.text,
            token_embeddings,
            backend_meta,
        })
    }

    fn reembed(&self, tokens: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        let Some(embed_url) = &self.config.embed_endpoint else {
            return Err(BackendError::Wire(
                "backend returned no hidden states and no embed endpoint is configured".into(),
            ));
        };
        let request = EmbedRequest {
            model: self.config.model.clone(),
            input: tokens.to_vec(),
        };
        let response: EmbedResponse = self.post_json(embed_url, &request)?;
        Ok(response.embeddings)
    }
}

impl LmmBackend for HttpBackend {
    fn handshake(&self) -> Result<Handshake, BackendError> {
        if let Some(h) = self.cached_handshake.lock().unwrap().clone() {
            return Ok(h);
        }
        let url = format!("{}/handshake", self.config.endpoint.trim_end_matches('/'));
        let request = HandshakeRequest {
            model: self.config.model.clone(),
            layer_selector: self.config.layer_selector.clone(),
        };
        let response: HandshakeResponse = self.post_json(&url, &request)?;
        if response.dim == 0 {
            return Err(BackendError::Wire("handshake advertised dim 0".into()));
        }
        let handshake = Handshake {
            dim: response.dim,
            model_id: response.model_id,
            layer_selector: response.layer_selector,
        };
        *self.cached_handshake.lock().unwrap() = Some(handshake.clone());
        Ok(handshake)
    }

    fn describe_video(
        &self,
        video: &VideoRef,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        let prompt = PromptTemplate::builtin(PromptName::DescribeVideo).render(None, None)?;
        self.generate(video, prompt, params, "describe_video")
    }

    fn reason_after_effects(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        let prompt =
            PromptTemplate::builtin(PromptName::ReasonAfterEffects).render(Some(edit), None)?;
        self.generate(reference, prompt, params, "reason_after_effects")
    }

    fn refine_trace(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        previous_trace: &str,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        let base =
            PromptTemplate::builtin(PromptName::ReasonAfterEffects).render(Some(edit), None)?;
        let prompt = format!("{base}\n\n{}", refinement_prompt(previous_trace));
        self.generate(reference, prompt, params, "refine_trace")
    }

    fn generate_target_description(
        &self,
        reference: &VideoRef,
        edit: &EditText,
        trace: &ReasoningRecord,
        params: &SamplingParams,
    ) -> Result<GenerationResult, BackendError> {
        let trace_text = trace.render_effect_query();
        let prompt = PromptTemplate::builtin(PromptName::GenerateTarget)
            .render(Some(edit), Some(trace_text.as_str()))?;
        self.generate(reference, prompt, params, "generate_target_description")
    }
}
