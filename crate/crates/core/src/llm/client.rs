use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::LlmClientConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("transport error: {0}")]
    Transport(String),
    /// Not worth retrying (bad request, authentication).
    #[error("request rejected: {0}")]
    Fatal(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        !matches!(self, TransportError::Fatal(_))
    }
}

/// Text in, text out.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str, config: &LlmClientConfig) -> Result<String, TransportError>;
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    message: Option<Message>,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

/// Client for an OpenAI-style `completions` endpoint.
///
/// The API secret is read once from the environment variable named in the
/// config and only ever sent as a bearer token.
pub struct HttpCompletionClient {
    agent: ureq::Agent,
    api_key: Option<String>,
}

impl std::fmt::Debug for HttpCompletionClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpCompletionClient")
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpCompletionClient {
    pub fn from_config(config: &LlmClientConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!(
                "{} is not set; requests are unauthenticated",
                config.api_key_env
            );
        }
        Self::with_key(config, api_key)
    }

    pub fn with_key(config: &LlmClientConfig, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpCompletionClient { agent, api_key }
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str, config: &LlmClientConfig) -> Result<String, TransportError> {
        let mut request = self.agent.post(&config.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = request
            .send_json(CompletionRequest {
                model: &config.model,
                prompt,
                temperature: config.temperature,
                max_tokens: config.max_tokens,
            })
            .map_err(|e| TransportError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            429 => return Err(TransportError::RateLimited(format!("HTTP {status}"))),
            500..=599 => return Err(TransportError::Transport(format!("HTTP {status}"))),
            _ => return Err(TransportError::Fatal(format!("HTTP {status}"))),
        }
        let body: CompletionResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Transport(format!("bad response body: {e}")))?;
        let choice = body
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| TransportError::Transport("response has no choices".into()))?;
        choice
            .text
            .or(choice.message.map(|m| m.content))
            .ok_or_else(|| TransportError::Transport("choice has no text".into()))
    }
}

/// Answers prompts from recorded completions, keyed by prompt hash.
///
/// Built from an audit file it replays a previous run offline; unknown
/// prompts fail without retry.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    completions: HashMap<String, String>,
}

impl ReplayClient {
    /// Maps each text's prompt to a completion.
    pub fn from_texts<I, T, C>(pairs: I) -> Result<Self, super::LlmError>
    where
        I: IntoIterator<Item = (T, C)>,
        T: AsRef<str>,
        C: Into<String>,
    {
        let mut completions = HashMap::new();
        for (text, completion) in pairs {
            let prompt = super::build_prompt(text.as_ref())?;
            completions.insert(super::prompt_hash(&prompt), completion.into());
        }
        Ok(ReplayClient { completions })
    }

    /// Uses the last recorded completion for each prompt hash.
    pub fn from_audit(records: &[super::AuditRecord]) -> Self {
        let completions = records
            .iter()
            .filter_map(|r| Some((r.prompt_sha256.clone(), r.completion.clone()?)))
            .collect();
        ReplayClient { completions }
    }

    pub fn len(&self) -> usize {
        self.completions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.completions.is_empty()
    }
}

impl CompletionClient for ReplayClient {
    fn complete(&self, prompt: &str, _config: &LlmClientConfig) -> Result<String, TransportError> {
        let hash = super::prompt_hash(prompt);
        self.completions.get(&hash).cloned().ok_or_else(|| {
            TransportError::Fatal(format!("no recorded completion for prompt {hash}"))
        })
    }
}
