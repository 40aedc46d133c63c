//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Agent, AgentFailure, AgentRequest};
use crate::population::Population;
use crate::prompt::parse_population;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HttpLlmAgentConfig {
    /// Base URL; the request goes to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Extra attempts after the first one.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    /// First backoff delay; doubles after every failed attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub credential_env: Option<String>,
}

fn default_temperature() -> f64 {
    1.0
}
fn default_retries() -> usize {
    3
}
fn default_timeout_ms() -> u64 {
    60_000
}
fn default_backoff_ms() -> u64 {
    500
}

impl HttpLlmAgentConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: default_temperature(),
            max_retries: default_retries(),
            timeout_ms: default_timeout_ms(),
            backoff_ms: default_backoff_ms(),
            credential_env: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(format!("temperature {} must be finite and >= 0", self.temperature));
        }
        if self.endpoint.is_empty() {
            return Err("endpoint is empty".into());
        }
        if self.timeout_ms == 0 {
            return Err("timeout must be positive".into());
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HttpReply {
    pub text: String,
    /// Attempts beyond the first that were needed.
    pub retries: usize,
}

fn resolve_token(config: &HttpLlmAgentConfig) -> Result<Option<String>, AgentFailure> {
    match &config.credential_env {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| AgentFailure::Credential(format!("environment variable {name} is not set"))),
    }
}

fn build_client(config: &HttpLlmAgentConfig) -> Result<reqwest::blocking::Client, AgentFailure> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(config.timeout_ms))
        .build()
        .map_err(|e| AgentFailure::Transport {
            message: e.to_string(),
            attempts: 0,
        })
}

fn extract_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}

fn send_with_retries(
    client: &reqwest::blocking::Client,
    config: &HttpLlmAgentConfig,
    prompt: &str,
) -> Result<HttpReply, AgentFailure> {
    let token = resolve_token(config)?;
    let body = json!({
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    });
    let url = config.url();
    let attempts = config.max_retries + 1;
    let mut last = None;
    for attempt in 0..attempts {
        if attempt > 0 {
            let delay = config.backoff_ms.saturating_mul(1u64 << (attempt - 1).min(20));
            std::thread::sleep(Duration::from_millis(delay));
        }
        let mut req = client.post(&url).json(&body);
        if let Some(t) = &token {
            req = req.bearer_auth(t);
        }
        let failure = match req.send() {
            Err(e) => AgentFailure::Transport {
                message: e.to_string(),
                attempts: attempt + 1,
            },
            Ok(resp) => {
                let status = resp.status();
                let text = resp.text().unwrap_or_default();
                if status.is_success() {
                    match extract_content(&text) {
                        Some(content) => {
                            return Ok(HttpReply {
                                text: content,
                                retries: attempt,
                            })
                        }
                        None => AgentFailure::Api {
                            status: status.as_u16(),
                            body: "response has no choices[0].message.content".into(),
                            attempts: attempt + 1,
                        },
                    }
                } else {
                    AgentFailure::Api {
                        status: status.as_u16(),
                        body: text.chars().take(200).collect(),
                        attempts: attempt + 1,
                    }
                }
            }
        };
        log::warn!("chat completion attempt {} failed: {failure}", attempt + 1);
        last = Some(failure);
    }
    Err(last.expect("at least one attempt"))
}

/// One chat-completion round trip with retries and exponential backoff.
pub fn http_generate(config: &HttpLlmAgentConfig, prompt: &str) -> Result<HttpReply, AgentFailure> {
    let client = build_client(config)?;
    send_with_retries(&client, config, prompt)
}

/// Remote language model behind an OpenAI-compatible endpoint.
pub struct HttpLlmAgent {
    config: HttpLlmAgentConfig,
    client: reqwest::blocking::Client,
}

impl HttpLlmAgent {
    pub fn new(config: HttpLlmAgentConfig) -> Result<Self, AgentFailure> {
        config.validate().map_err(|m| AgentFailure::Transport {
            message: m,
            attempts: 0,
        })?;
        let client = build_client(&config)?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpLlmAgentConfig {
        &self.config
    }
}

impl Agent for HttpLlmAgent {
    fn name(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn generate(&self, request: &AgentRequest<'_>, _rng: &mut ChaCha8Rng) -> Result<Population, AgentFailure> {
        let prompt = request.prompt.ok_or_else(|| AgentFailure::Transport {
            message: "no prompt was rendered for an HTTP agent".into(),
            attempts: 0,
        })?;
        let reply = send_with_retries(&self.client, &self.config, prompt)?;
        Ok(parse_population(
            &reply.text,
            request.rows,
            request.bounds,
            request.format,
        )?)
    }

    fn needs_prompt(&self) -> bool {
        true
    }

    fn prefers_parallel(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"0.1,0.2"}}]}"#;
        assert_eq!(extract_content(body).as_deref(), Some("0.1,0.2"));
        assert_eq!(extract_content("{}"), None);
        assert_eq!(extract_content("not json"), None);
    }

    #[test]
    fn url_and_validation() {
        let mut c = HttpLlmAgentConfig::new("http://h/v1/", "m");
        assert_eq!(c.url(), "http://h/v1/chat/completions");
        assert!(c.validate().is_ok());
        c.temperature = f64::NAN;
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_credential_is_typed() {
        let mut c = HttpLlmAgentConfig::new("http://127.0.0.1:9", "m");
        c.credential_env = Some("LLMO_TEST_SURELY_UNSET_VARIABLE".into());
        assert!(matches!(http_generate(&c, "hi"), Err(AgentFailure::Credential(_))));
    }
}
