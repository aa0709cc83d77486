//! Token-probability perception client over the generic chat-completions
//! wire shape: per-token log-probabilities are requested and the Yes/No
//! answer's probabilities become the proposition confidence.

use std::path::Path;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use crate::tl::Proposition;
use crate::transport::HttpChat;

use super::{
    confidence_from_answer, detector_prompt, ClientIdentity, FrameWindow, PerceptionClient,
    PerceptionError, TokenScore,
};

#[derive(Debug, Clone)]
pub struct VlmConfig {
    /// Full chat-completions URL, e.g. `https://host/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Maximum frames per request (the model's visual context limit).
    pub max_frames: usize,
    /// Concurrent request cap used by batch scoring.
    pub parallelism: usize,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
}

impl Default for VlmConfig {
    fn default() -> Self {
        VlmConfig {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "internvl2-8b".into(),
            api_key_env: None,
            timeout_secs: 60,
            max_frames: 3,
            parallelism: 4,
            retry_attempts: 3,
            retry_backoff_ms: 500,
        }
    }
}

pub struct VlmClient {
    identity: ClientIdentity,
    config: VlmConfig,
    transport: HttpChat,
}

impl VlmClient {
    pub fn new(config: VlmConfig) -> Result<Self, PerceptionError> {
        let bearer = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| PerceptionError::MissingApiKey { var: var.clone() })?,
            ),
            None => None,
        };
        let transport = HttpChat::new(
            config.endpoint.clone(),
            bearer,
            Duration::from_secs(config.timeout_secs),
            config.retry_attempts,
            Duration::from_millis(config.retry_backoff_ms),
        );
        Ok(VlmClient {
            identity: ClientIdentity {
                name: "vlm".into(),
                model: config.model.clone(),
            },
            config,
            transport,
        })
    }

    pub fn config(&self) -> &VlmConfig {
        &self.config
    }

    fn request_body(
        &self,
        prop: &Proposition,
        frames: &[std::path::PathBuf],
    ) -> Result<Value, PerceptionError> {
        let mut content = vec![json!({"type": "text", "text": detector_prompt(prop)})];
        for frame in frames {
            content.push(json!({
                "type": "image_url",
                "image_url": {"url": encode_frame(frame)?}
            }));
        }
        Ok(json!({
            "model": self.config.model,
            "temperature": 0,
            "logprobs": true,
            "top_logprobs": 5,
            "max_tokens": 8,
            "messages": [{"role": "user", "content": content}]
        }))
    }
}

/// Encodes one frame as a base64 data URL.
fn encode_frame(path: &Path) -> Result<String, PerceptionError> {
    let bytes = std::fs::read(path).map_err(|source| PerceptionError::FrameRead {
        path: path.display().to_string(),
        source,
    })?;
    let mime = match path.extension().and_then(|e| e.to_str()) {
        Some("png") => "image/png",
        Some("webp") => "image/webp",
        _ => "image/jpeg",
    };
    let encoded = base64::engine::general_purpose::STANDARD.encode(bytes);
    Ok(format!("data:{mime};base64,{encoded}"))
}

/// Pulls per-token scores out of a chat-completions response.
fn parse_token_scores(response: &Value) -> Result<Vec<TokenScore>, PerceptionError> {
    let tokens = response
        .pointer("/choices/0/logprobs/content")
        .and_then(Value::as_array)
        .ok_or(PerceptionError::MissingLogprobs)?;
    let mut scores = Vec::with_capacity(tokens.len());
    for entry in tokens {
        let token = entry
            .get("token")
            .and_then(Value::as_str)
            .ok_or(PerceptionError::MissingLogprobs)?;
        let logprob = entry
            .get("logprob")
            .and_then(Value::as_f64)
            .ok_or(PerceptionError::MissingLogprobs)?;
        let alternatives = entry
            .get("top_logprobs")
            .and_then(Value::as_array)
            .map(|alts| {
                alts.iter()
                    .filter_map(|alt| {
                        Some((
                            alt.get("token")?.as_str()?.to_string(),
                            alt.get("logprob")?.as_f64()?,
                        ))
                    })
                    .collect()
            })
            .unwrap_or_default();
        scores.push(TokenScore {
            token: token.to_string(),
            logprob,
            alternatives,
        });
    }
    Ok(scores)
}

impl PerceptionClient for VlmClient {
    fn identity(&self) -> &ClientIdentity {
        &self.identity
    }

    fn confidence(
        &self,
        prop: &Proposition,
        window: &FrameWindow<'_>,
    ) -> Result<f64, PerceptionError> {
        if window.frames.len() > self.config.max_frames {
            return Err(PerceptionError::ContextLimit {
                got: window.frames.len(),
                limit: self.config.max_frames,
            });
        }
        let body = self.request_body(prop, window.frames)?;
        let response = self
            .transport
            .post_json(&body)
            .map_err(|e| PerceptionError::Transport {
                attempts: e.attempts,
                message: e.message,
            })?;
        let tokens = parse_token_scores(&response)?;
        confidence_from_answer(&tokens)
    }
}
