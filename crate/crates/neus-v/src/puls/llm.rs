//! Text-generation clients used by the prompt translation stages.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value};

use crate::perception::ClientIdentity;
use crate::transport::HttpChat;

use super::PulsError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

/// Contract: turn a conversation into the next assistant message.
pub trait TextGenClient: Send + Sync {
    fn identity(&self) -> &ClientIdentity;
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, PulsError>;
}

#[derive(Debug, Clone)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: None,
            timeout_secs: 120,
            retry_attempts: 3,
            retry_backoff_ms: 500,
        }
    }
}

/// Chat-completions text client.
pub struct HttpTextGenClient {
    identity: ClientIdentity,
    model: String,
    transport: HttpChat,
}

impl HttpTextGenClient {
    pub fn new(config: LlmConfig) -> Result<Self, PulsError> {
        let bearer = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| PulsError::MissingApiKey { var: var.clone() })?,
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
        Ok(HttpTextGenClient {
            identity: ClientIdentity {
                name: "llm".into(),
                model: config.model.clone(),
            },
            model: config.model,
            transport,
        })
    }
}

impl TextGenClient for HttpTextGenClient {
    fn identity(&self) -> &ClientIdentity {
        &self.identity
    }

    fn complete(&self, messages: &[ChatMessage]) -> Result<String, PulsError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": messages
                .iter()
                .map(|m| json!({"role": m.role, "content": m.content}))
                .collect::<Vec<Value>>(),
        });
        let response = self
            .transport
            .post_json(&body)
            .map_err(|e| PulsError::Transport {
                attempts: e.attempts,
                message: e.message,
            })?;
        response
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| PulsError::Transport {
                attempts: 1,
                message: "response carried no message content".into(),
            })
    }
}

/// Replays a fixed queue of responses. Used for recorded-response runs and
/// tests; byte-identical inputs yield byte-identical outputs.
pub struct ReplayClient {
    identity: ClientIdentity,
    responses: Mutex<VecDeque<String>>,
}

impl ReplayClient {
    pub fn new(responses: Vec<String>) -> Self {
        ReplayClient {
            identity: ClientIdentity {
                name: "replay".into(),
                model: "recorded".into(),
            },
            responses: Mutex::new(responses.into()),
        }
    }
}

impl TextGenClient for ReplayClient {
    fn identity(&self) -> &ClientIdentity {
        &self.identity
    }

    fn complete(&self, _messages: &[ChatMessage]) -> Result<String, PulsError> {
        self.responses
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(PulsError::ReplayExhausted)
    }
}
