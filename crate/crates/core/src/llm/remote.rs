//! HTTP backend speaking the chat-completions wire shape.
//!
//! One request per prompt:
//!
//! ```json
//! {"model": "...", "messages": [{"role": "user", "content": "..."}],
//!  "n": k, "logprobs": true}
//! ```
//!
//! with an optional leading system message. The response is parsed for
//! `n` choices; a per-choice likelihood is recovered from token logprobs
//! when present and falls back to weight 1 otherwise, since only relative
//! weights matter downstream.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

use crate::llm::backend::{GeneratorBackend, GeneratorOutput, OutputEntry};
use crate::{Error, Result};

fn default_timeout_secs() -> u64 {
    30
}

/// Connection settings for a chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Full endpoint URL, e.g. `https://host/v1/chat/completions`.
    pub url: String,
    /// Model name sent in the request body; also the backend's cache
    /// identity.
    pub model: String,
    /// Name of the environment variable holding the bearer token. Unset
    /// means the endpoint needs no auth.
    #[serde(default)]
    pub token_env: Option<String>,
    /// Optional system message prepended to every request, for services
    /// that take the task instruction out of the user prompt.
    #[serde(default)]
    pub system_prompt: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

/// Builds the request body for one prompt.
pub fn build_request_body(config: &RemoteConfig, prompt: &str, k: usize) -> Value {
    let mut messages = Vec::new();
    if let Some(system) = &config.system_prompt {
        messages.push(json!({"role": "system", "content": system}));
    }
    messages.push(json!({"role": "user", "content": prompt}));
    json!({
        "model": config.model,
        "messages": messages,
        "n": k,
        "logprobs": true,
    })
}

/// Extracts one likelihood from a choice: the exponentiated sum of token
/// logprobs when present and finite, otherwise 1.
fn choice_likelihood(choice: &Value) -> f64 {
    let Some(tokens) = choice["logprobs"]["content"].as_array() else {
        return 1.0;
    };
    let mut total = 0.0;
    for token in tokens {
        match token["logprob"].as_f64() {
            Some(lp) => total += lp,
            None => return 1.0,
        }
    }
    let likelihood = total.exp();
    if likelihood.is_finite() && likelihood > 0.0 {
        likelihood
    } else {
        1.0
    }
}

/// Parses a chat-completions response into ranked outputs.
pub fn parse_choices(response: &Value) -> Result<GeneratorOutput> {
    let choices = response["choices"]
        .as_array()
        .ok_or_else(|| Error::Backend("response has no choices array".into()))?;
    let mut entries = Vec::with_capacity(choices.len());
    for (index, choice) in choices.iter().enumerate() {
        let text = choice["message"]["content"]
            .as_str()
            .ok_or_else(|| {
                Error::Backend(format!("choice {index} has no message content"))
            })?
            .to_string();
        entries.push(OutputEntry { text, likelihood: choice_likelihood(choice) });
    }
    GeneratorOutput::new(entries)
}

/// Whether a failed request is worth retrying: transient server trouble
/// and rate limiting are; other client errors are not.
pub fn should_retry_status(code: u16) -> bool {
    code == 429 || (500..600).contains(&code)
}

fn should_retry(error: &ureq::Error) -> bool {
    match error {
        ureq::Error::StatusCode(code) => should_retry_status(*code),
        // Everything else from the transport layer (connect, timeout,
        // protocol) is treated as transient.
        _ => true,
    }
}

/// Maximum retries after the initial attempt.
const MAX_RETRIES: u32 = 2;
const BACKOFF_BASE: Duration = Duration::from_millis(200);

/// Live chat-completions client with bounded retries.
pub struct RemoteBackend {
    id: String,
    config: RemoteConfig,
    token: Option<String>,
    agent: Agent,
}

impl RemoteBackend {
    /// Resolves the auth token (when `token_env` is set) and prepares the
    /// HTTP agent. A configured-but-missing token variable is an error up
    /// front rather than a failed request later.
    pub fn new(config: RemoteConfig) -> Result<Self> {
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!("auth token environment variable {var} is not set"))
            })?),
            None => None,
        };
        let agent_config = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build();
        Ok(Self {
            id: format!("remote:{}", config.model),
            config,
            token,
            agent: Agent::new_with_config(agent_config),
        })
    }

    fn request(&self, body: &Value) -> std::result::Result<Value, ureq::Error> {
        let mut request = self.agent.post(&self.config.url);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        request.send_json(body)?.body_mut().read_json()
    }
}

impl GeneratorBackend for RemoteBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, k: usize) -> Result<GeneratorOutput> {
        if k == 0 {
            return Err(Error::Config("generator k must be at least 1".into()));
        }
        let body = build_request_body(&self.config, prompt, k);
        let mut attempt = 0;
        loop {
            match self.request(&body) {
                Ok(response) => return parse_choices(&response),
                Err(e) if attempt < MAX_RETRIES && should_retry(&e) => {
                    let wait = BACKOFF_BASE * 2u32.pow(attempt);
                    log::warn!(
                        "remote generator attempt {} failed ({e}); retrying in {wait:?}",
                        attempt + 1
                    );
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(e) => {
                    return Err(Error::Backend(format!(
                        "remote generator failed after {} attempts: {e}",
                        attempt + 1
                    )))
                }
            }
        }
    }
}
