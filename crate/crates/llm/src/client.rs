//! Blocking OpenAI-compatible chat-completions client.

use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Base URL; requests go to `{endpoint}/chat/completions`.
    pub endpoint: String,
    pub primary_model: String,
    /// Model for movement and minor decisions. Empty means the primary.
    pub secondary_model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub temperature: f64,
    /// Send a tool schema forcing `{"action": integer}`.
    pub tools: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "http://127.0.0.1:8000/v1".into(),
            primary_model: "gpt-4o".into(),
            secondary_model: String::new(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 30.0,
            retries: 2,
            backoff_ms: 250,
            temperature: 0.0,
            tools: false,
        }
    }
}

impl LlmConfig {
    pub fn load(path: &Path) -> Result<LlmConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn secondary(&self) -> &str {
        if self.secondary_model.is_empty() {
            &self.primary_model
        } else {
            &self.secondary_model
        }
    }

    pub fn with_endpoint(mut self, endpoint: impl Into<String>) -> Self {
        self.endpoint = endpoint.into();
        self
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("malformed completion: {0}")]
    Body(String),
}

impl ClientError {
    fn retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) => true,
            ClientError::Status(s) => *s == 429 || *s >= 500,
            ClientError::Body(_) => false,
        }
    }
}

/// One finished request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub model: String,
    /// Message content, or the tool-call arguments when the model used the tool.
    pub text: String,
    pub latency_ms: f64,
    pub attempts: u32,
}

pub struct ChatClient {
    agent: ureq::Agent,
    config: LlmConfig,
    api_key: Option<String>,
}

impl ChatClient {
    pub fn new(config: LlmConfig) -> ChatClient {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        ChatClient { agent, config, api_key }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    pub fn request_body(&self, model: &str, prompt: &str) -> Value {
        let mut body = json!({
            "model": model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        if self.config.tools {
            body["tools"] = json!([{
                "type": "function",
                "function": {
                    "name": "choose_action",
                    "description": "Pick an action by its menu number.",
                    "parameters": {
                        "type": "object",
                        "properties": {"action": {"type": "integer"}},
                        "required": ["action"],
                    },
                },
            }]);
            body["tool_choice"] = json!({"type": "function", "function": {"name": "choose_action"}});
        }
        body
    }

    /// Send one prompt, retrying transport failures, 429 and 5xx with
    /// exponential backoff.
    pub fn complete(&self, model: &str, prompt: &str) -> Result<Completion, ClientError> {
        let body = self.request_body(model, prompt);
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let start = Instant::now();
        let mut attempt = 0;
        loop {
            attempt += 1;
            match self.send(&url, &body) {
                Ok(text) => {
                    return Ok(Completion {
                        model: model.to_string(),
                        text,
                        latency_ms: start.elapsed().as_secs_f64() * 1e3,
                        attempts: attempt,
                    })
                }
                Err(e) if e.retryable() && attempt <= self.config.retries => {
                    let wait = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                    std::thread::sleep(Duration::from_millis(wait));
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn send(&self, url: &str, body: &Value) -> Result<String, ClientError> {
        let mut req = self.agent.post(url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(ClientError::Status(status));
        }
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ClientError::Body(e.to_string()))?;
        message_text(&v).ok_or_else(|| ClientError::Body("no choices[0].message".into()))
    }
}

/// `choices[0].message`: the first tool call's arguments if present, else
/// the content string.
pub fn message_text(body: &Value) -> Option<String> {
    let msg = body.get("choices")?.get(0)?.get("message")?;
    if let Some(args) = msg
        .get("tool_calls")
        .and_then(|t| t.get(0))
        .and_then(|c| c.get("function"))
        .and_then(|f| f.get("arguments"))
    {
        return Some(match args {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        });
    }
    match msg.get("content")? {
        Value::String(s) => Some(s.clone()),
        Value::Null => Some(String::new()),
        other => Some(other.to_string()),
    }
}
