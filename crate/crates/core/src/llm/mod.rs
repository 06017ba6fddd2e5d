//! Prompt-based zero-shot classification through a text-completion endpoint.
//!
//! A single two-stage prompt asks whether the text is moral and, if so, which
//! dyads it reflects. The completion is parsed leniently: dyad names and single
//! dyad members both count.

mod client;
mod parse;

use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prediction::PredictionSet;

pub use client::{CompletionClient, HttpCompletionClient, ReplayClient, TransportError};
pub use parse::{parse_response, ParseError};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("empty input text")]
    EmptyText,
    #[error("invalid client configuration: {0}")]
    Config(String),
}

/// Completion client settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmClientConfig {
    pub endpoint: String,
    pub model: String,
    pub max_retries: u32,
    pub timeout_secs: u64,
    pub parallelism: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Environment variable holding the API secret.
    pub api_key_env: String,
    /// First backoff delay after a transport failure; doubles per retry.
    pub backoff_base_ms: u64,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        LlmClientConfig {
            endpoint: "https://api.openai.com/v1/completions".to_string(),
            model: "gpt-3.5-turbo-instruct".to_string(),
            max_retries: 3,
            timeout_secs: 60,
            parallelism: 4,
            temperature: 0.0,
            max_tokens: 64,
            api_key_env: "MORALSCOPE_LLM_API_KEY".to_string(),
            backoff_base_ms: 500,
        }
    }
}

impl LlmClientConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.parallelism < 1 {
            return Err(LlmError::Config("parallelism must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(LlmError::Config("temperature must be >= 0".into()));
        }
        Ok(())
    }

    fn backoff(&self, retry: u32) -> Duration {
        let factor = 1u64 << retry.saturating_sub(1).min(16);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor))
    }
}

/// Builds the two-stage classification prompt around `text`, verbatim.
pub fn build_prompt(text: &str) -> Result<String, LlmError> {
    if text.trim().is_empty() {
        return Err(LlmError::EmptyText);
    }
    Ok(format!(
        "Does the sentence {text} convey a moral content or not? (answer with one word: moral \
         or not moral). If yes, based on the Moral Foundation Theory, what moral values does the \
         text reflect? (categorize text with Care/Harm, Fairness/Cheating, Loyalty/Betrayal, \
         Authority/Subversion, Purity/Degradation)."
    ))
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// One completion as received.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlmRawResponse {
    pub request_id: String,
    pub completion: String,
    /// Milliseconds since the Unix epoch.
    pub received_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum LlmOutcome {
    Labeled {
        prediction: PredictionSet,
    },
    /// Every attempt returned a completion that could not be parsed.
    Unparsed {
        completion: String,
    },
    /// Transport errors exhausted the retries, or a non-retryable error occurred.
    Failed {
        error: String,
    },
}

/// One line of the audit file: every request made for an item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub item_id: String,
    pub attempt: u32,
    pub prompt_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<String>,
    /// `labeled`, `parse_error` or `transport_error`.
    pub outcome: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub received_at_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmClassification {
    pub item_id: String,
    pub outcome: LlmOutcome,
    /// Attempts beyond the first.
    pub retries: u32,
    pub audit: Vec<AuditRecord>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Prompt, complete, parse; retrying the identical prompt on parse and
/// transport failures up to `config.max_retries` times.
pub fn classify_via_llm(
    item_id: &str,
    text: &str,
    client: &dyn CompletionClient,
    config: &LlmClientConfig,
) -> LlmClassification {
    let mut result = LlmClassification {
        item_id: item_id.to_string(),
        outcome: LlmOutcome::Failed {
            error: String::new(),
        },
        retries: 0,
        audit: Vec::new(),
    };
    let prompt = match build_prompt(text) {
        Ok(p) => p,
        Err(e) => {
            result.outcome = LlmOutcome::Failed {
                error: e.to_string(),
            };
            return result;
        }
    };
    let hash = prompt_hash(&prompt);

    for attempt in 0..=config.max_retries {
        if attempt > 0 {
            result.retries = attempt;
            log::info!("item {item_id}: retry {attempt}/{}", config.max_retries);
        }
        let mut record = AuditRecord {
            item_id: item_id.to_string(),
            attempt,
            prompt_sha256: hash.clone(),
            completion: None,
            outcome: String::new(),
            error: None,
            received_at_ms: None,
        };
        match client.complete(&prompt, config) {
            Ok(completion) => {
                record.received_at_ms = Some(now_ms());
                record.completion = Some(completion.clone());
                match parse_response(&completion) {
                    Ok(prediction) => {
                        record.outcome = "labeled".into();
                        result.audit.push(record);
                        result.outcome = LlmOutcome::Labeled { prediction };
                        return result;
                    }
                    Err(e) => {
                        record.outcome = "parse_error".into();
                        record.error = Some(e.to_string());
                        result.audit.push(record);
                        result.outcome = LlmOutcome::Unparsed { completion };
                    }
                }
            }
            Err(e) => {
                record.outcome = "transport_error".into();
                record.error = Some(e.to_string());
                result.audit.push(record);
                let retryable = e.is_retryable();
                result.outcome = LlmOutcome::Failed {
                    error: e.to_string(),
                };
                if !retryable {
                    return result;
                }
                if attempt < config.max_retries {
                    std::thread::sleep(config.backoff(attempt + 1));
                }
            }
        }
    }
    result
}

/// Classifies items under the configured parallelism limit. Results are
/// sorted by item id.
pub fn classify_batch_llm(
    items: &[(&str, &str)],
    client: &dyn CompletionClient,
    config: &LlmClientConfig,
) -> Result<Vec<LlmClassification>, LlmError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| LlmError::Config(e.to_string()))?;
    let mut out: Vec<LlmClassification> = pool.install(|| {
        items
            .par_iter()
            .map(|(id, text)| classify_via_llm(id, text, client, config))
            .collect()
    });
    out.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    Ok(out)
}
