//! Backends that answer without a network: recorded fixtures and a
//! token-overlap stand-in for the model.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cache_key, Backend, ChatRequest, ChatResponse, GatewayError, Usage};
use crate::prompt::FORCED_ANSWER_SENTENCE;
use crate::selection::{jaccard, similarity_tokens};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// One recorded answer, keyed by request digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub digest: String,
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

pub struct FixtureBackend {
    entries: HashMap<String, FixtureEntry>,
}

impl FixtureBackend {
    pub fn new(entries: impl IntoIterator<Item = FixtureEntry>) -> Self {
        Self { entries: entries.into_iter().map(|e| (e.digest.clone(), e)).collect() }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let reader = BufReader::new(fs::File::open(path)?);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: FixtureEntry = serde_json::from_str(&line).map_err(|e| {
                GatewayError::Malformed(format!("{} line {}: {e}", path.display(), i + 1))
            })?;
            entries.push(e);
        }
        Ok(Self::new(entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for FixtureBackend {
    fn id(&self) -> &str {
        "fixture"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let digest = cache_key(request);
        let e = self.entries.get(&digest).ok_or(GatewayError::FixtureMiss(digest))?;
        Ok(ChatResponse {
            content: e.content.clone(),
            usage: Some(Usage { prompt_tokens: e.prompt_tokens, completion_tokens: e.completion_tokens }),
            backend_id: self.id().to_string(),
        })
    }
}

/// Answers "Yes." when the token overlap of the two offers in the final
/// user turn reaches `threshold`. Only meant for offline testing.
pub struct HeuristicBackend {
    threshold: f64,
}

impl HeuristicBackend {
    pub fn new(threshold: f64) -> Result<Self, GatewayError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(GatewayError::Config(format!("threshold must lie in [0, 1], got {threshold}")));
        }
        Ok(Self { threshold })
    }
}

impl Default for HeuristicBackend {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD }
    }
}

impl Backend for HeuristicBackend {
    fn id(&self) -> &str {
        "heuristic"
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        Ok(ChatResponse {
            content: heuristic_oracle(request, self.threshold)?,
            usage: None,
            backend_id: self.id().to_string(),
        })
    }
}

pub fn heuristic_oracle(request: &ChatRequest, threshold: f64) -> Result<String, GatewayError> {
    let (a, b) = extract_blocks(request.messages().last_user())?;
    let sim = jaccard(&similarity_tokens(a), &similarity_tokens(b));
    Ok(if sim >= threshold { "Yes." } else { "No." }.to_string())
}

/// Pulls the two quoted offer blocks out of a rendered question.
fn extract_blocks(text: &str) -> Result<(&str, &str), GatewayError> {
    let unparseable = || GatewayError::UnparseablePrompt(text.chars().take(80).collect());
    let (noun, start) = ["Product", "Entity"]
        .iter()
        .find_map(|n| text.find(&format!("{n} 1: '")).map(|i| (*n, i + n.len() + 5)))
        .ok_or_else(unparseable)?;
    let second = format!("'\n{noun} 2: '");
    let mid = start + text[start..].find(&second).ok_or_else(unparseable)?;
    let first_block = &text[start..mid];
    let rest = &text[mid + second.len()..];

    let question_after = format!("'\nDo the following two {} descriptions", noun.to_lowercase());
    let forced_after = format!("'\n{FORCED_ANSWER_SENTENCE}");
    let end = rest
        .rfind(&question_after)
        .or_else(|| rest.rfind(&forced_after))
        .or_else(|| rest.strip_suffix('\'').map(str::len))
        .ok_or_else(unparseable)?;
    Ok((first_block, &rest[..end]))
}
