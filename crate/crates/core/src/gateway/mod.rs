//! Chat-completion dispatch.
//!
//! Requests always run at temperature 0. Responses are cached on disk under
//! the SHA-256 digest of the canonical request, so reruns never hit the
//! network twice for the same prompt.

mod cache;
mod offline;
mod remote;
mod retry;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use cache::{cached_complete, CacheOutcome, ResponseCache};
pub use offline::{heuristic_oracle, FixtureBackend, FixtureEntry, HeuristicBackend, DEFAULT_THRESHOLD};
pub use remote::{RemoteBackend, API_KEY_ENV};
pub use retry::{retry_with, Attempt, RetryPolicy};

use crate::prompt::MessageSequence;

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("request failed after {attempts} attempt(s): {message}")]
    Exhausted { attempts: u32, message: String },

    #[error("HTTP status {status}: {body}")]
    Status { status: u16, body: String },

    #[error("malformed response: {0}")]
    Malformed(String),

    #[error("fixture miss for digest {0}")]
    FixtureMiss(String),

    #[error("unparseable prompt: {0}")]
    UnparseablePrompt(String),

    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

/// A chat-completion request. Construction rejects any temperature other
/// than zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    model: String,
    temperature: f64,
    messages: MessageSequence,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, temperature: f64, messages: MessageSequence) -> Result<Self, GatewayError> {
        if temperature != 0.0 {
            return Err(GatewayError::Config(format!("temperature must be 0, got {temperature}")));
        }
        let model = model.into();
        if model.trim().is_empty() {
            return Err(GatewayError::Config("empty model id".into()));
        }
        Ok(Self { model, temperature: 0.0, messages })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn messages(&self) -> &MessageSequence {
        &self.messages
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    pub backend_id: String,
}

pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// Hex SHA-256 over the compact JSON of `(model, temperature, messages)`.
/// Field order is fixed by the struct layout.
pub fn cache_key(request: &ChatRequest) -> String {
    let canonical = serde_json::to_vec(request).expect("request serializes");
    hex::encode(Sha256::digest(&canonical))
}
