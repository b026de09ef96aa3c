use std::time::Duration;

use serde_json::{json, Value};

use super::DecodingParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// Connection-level failure; worth one retry.
    Transport(String),
    /// The endpoint answered but not with a usable completion.
    Protocol(String),
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendError::Transport(m) => write!(f, "transport: {m}"),
            BackendError::Protocol(m) => write!(f, "protocol: {m}"),
        }
    }
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, BackendError>;
}

/// Chat-completion endpoint speaking the common
/// `{model, messages, temperature, max_tokens}` request shape.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    token: Option<String>,
    id: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, token: Option<String>) -> Result<Self, BackendError> {
        let endpoint = endpoint.into();
        let model = model.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(600))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let id = format!("{model}@{endpoint}");
        Ok(Self { endpoint, model, token, id, client })
    }

    pub fn request_body(&self, prompt: &str, params: &DecodingParams) -> Value {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": 1,
        })
    }
}

impl CompletionBackend for HttpBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, BackendError> {
        let mut req = self.client.post(&self.endpoint).json(&self.request_body(prompt, params));
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let body: Value = resp.json().map_err(|e| BackendError::Protocol(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Protocol(format!("HTTP {status}: {body}")));
        }
        body.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("response lacks choices[0].message.content".into()))
    }
}
