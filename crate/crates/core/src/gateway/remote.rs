use std::time::Duration;

use serde::Deserialize;

use super::retry::{retry_with, Attempt, RetryPolicy};
use super::{Backend, ChatRequest, ChatResponse, GatewayError, Usage};

pub const API_KEY_ENV: &str = "MATCHGPT_API_KEY";

/// OpenAI-compatible `chat/completions` endpoint.
pub struct RemoteBackend {
    url: String,
    api_key: String,
    policy: RetryPolicy,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

impl RemoteBackend {
    pub fn new(url: impl Into<String>, api_key: impl Into<String>, policy: RetryPolicy) -> Result<Self, GatewayError> {
        policy.validate()?;
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(GatewayError::Config(format!("{API_KEY_ENV} is empty")));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(Self { url: url.into(), api_key, policy, client })
    }

    /// Reads the bearer token from `MATCHGPT_API_KEY`.
    pub fn from_env(url: impl Into<String>, policy: RetryPolicy) -> Result<Self, GatewayError> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| GatewayError::Config(format!("{API_KEY_ENV} is not set")))?;
        Self::new(url, key, policy)
    }

    fn attempt(&self, request: &ChatRequest) -> Attempt<ChatResponse> {
        let resp = match self.client.post(&self.url).bearer_auth(&self.api_key).json(request).send() {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport: {e}")),
        };
        let status = resp.status().as_u16();
        let body = match resp.text() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if !(200..300).contains(&status) {
            return if RetryPolicy::is_retryable_status(status) {
                Attempt::Retry(format!("HTTP status {status}"))
            } else {
                Attempt::Fail(GatewayError::Status { status, body })
            };
        }
        match parse_body(&body) {
            Ok((content, usage)) => {
                Attempt::Done(ChatResponse { content, usage, backend_id: self.id().to_string() })
            }
            Err(e) => Attempt::Fail(e),
        }
    }
}

fn parse_body(body: &str) -> Result<(String, Option<Usage>), GatewayError> {
    let wire: WireResponse = serde_json::from_str(body).map_err(|e| GatewayError::Malformed(e.to_string()))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::Malformed("no choices in response".into()))?;
    Ok((choice.message.content.unwrap_or_default(), wire.usage))
}

impl Backend for RemoteBackend {
    fn id(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        retry_with(&self.policy, std::thread::sleep, |_| self.attempt(request))
    }
}
