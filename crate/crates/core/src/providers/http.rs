//! Clients for OpenAI-compatible HTTP endpoints (`/chat/completions`,
//! `/embeddings`).
//!
//! Credentials come from the environment: `APIGRAPH_API_KEY` holds the bearer
//! token and `APIGRAPH_API_BASE` overrides the base URL.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatModel, Embedder, ProviderError};

pub const API_KEY_ENV: &str = "APIGRAPH_API_KEY";
pub const API_BASE_ENV: &str = "APIGRAPH_API_BASE";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone)]
pub struct Endpoint {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl Endpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: None,
            timeout: Duration::from_secs(60),
        }
    }

    pub fn from_env() -> Self {
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        let mut ep = Self::new(base);
        ep.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        ep
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    fn agent(&self) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into()
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}/{}", self.base_url, path);
        let mut req = self.agent().post(&url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(ProviderError::Status { status, body: text });
        }
        serde_json::from_str(&text).map_err(|e| ProviderError::malformed(e.to_string(), text))
    }
}

/// Chat model behind `POST {base}/chat/completions`.
#[derive(Debug, Clone)]
pub struct HttpChatModel {
    endpoint: Endpoint,
    model: String,
    temperature: f64,
}

impl HttpChatModel {
    pub fn new(endpoint: Endpoint, model: impl Into<String>) -> Self {
        Self {
            endpoint,
            model: model.into(),
            temperature: 0.0,
        }
    }
}

impl ChatModel for HttpChatModel {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let reply = self.endpoint.post("chat/completions", &body)?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError::malformed("missing choices[0].message.content", reply.to_string()))
    }
}

/// Embedding model behind `POST {base}/embeddings`.
#[derive(Debug, Clone)]
pub struct HttpEmbedder {
    endpoint: Endpoint,
    model: String,
}

impl HttpEmbedder {
    pub fn new(endpoint: Endpoint, model: impl Into<String>) -> Self {
        Self {
            endpoint,
            model: model.into(),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let body = json!({"model": self.model, "input": text});
        let reply = self.endpoint.post("embeddings", &body)?;
        let arr = reply
            .pointer("/data/0/embedding")
            .and_then(Value::as_array)
            .ok_or_else(|| ProviderError::malformed("missing data[0].embedding", reply.to_string()))?;
        arr.iter()
            .map(|x| {
                x.as_f64()
                    .map(|f| f as f32)
                    .ok_or_else(|| ProviderError::malformed("non-numeric embedding entry", reply.to_string()))
            })
            .collect()
    }
}
