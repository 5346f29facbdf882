use std::fmt;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::{Provider, ProviderError, ProviderRequest};

pub const ENV_URL: &str = "BATTLE_PROVIDER_URL";
pub const ENV_MODEL: &str = "BATTLE_PROVIDER_MODEL";
pub const ENV_API_KEY: &str = "BATTLE_PROVIDER_API_KEY";

/// Settings for an OpenAI-compatible chat completions endpoint.
#[derive(Clone)]
pub struct HttpProviderConfig {
    /// Base URL such as `https://api.example.com/v1`, or the full
    /// `.../chat/completions` URL.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
}

impl fmt::Debug for HttpProviderConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpProviderConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl HttpProviderConfig {
    /// Reads `BATTLE_PROVIDER_URL`, `BATTLE_PROVIDER_MODEL` and the optional
    /// `BATTLE_PROVIDER_API_KEY`. Returns `None` when no URL is configured.
    pub fn from_env() -> Option<Self> {
        let base_url = std::env::var(ENV_URL).ok().filter(|v| !v.is_empty())?;
        Some(Self {
            base_url,
            model: std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into()),
            api_key: std::env::var(ENV_API_KEY).ok().filter(|v| !v.is_empty()),
        })
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    max_tokens: u32,
    temperature: f32,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Reference adapter for OpenAI-compatible endpoints. Each request is a
/// single stateless user message.
pub struct HttpProvider {
    config: HttpProviderConfig,
    client: reqwest::Client,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Self {
        let client = reqwest::Client::builder()
            .connect_timeout(Duration::from_secs(10))
            .build()
            .unwrap_or_else(|_| reqwest::Client::new());
        Self { config, client }
    }
}

fn transport_error(error: reqwest::Error, timeout: Duration) -> ProviderError {
    if error.is_timeout() {
        ProviderError::Timeout(timeout)
    } else {
        ProviderError::Provider {
            status: error.status().map(|s| s.as_u16()),
            message: error.to_string(),
        }
    }
}

#[async_trait]
impl Provider for HttpProvider {
    async fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let body = ChatRequest {
            model: &self.config.model,
            messages: [Message {
                role: "user",
                content: request.text(),
            }],
            max_tokens: request.max_length(),
            temperature: request.temperature(),
        };
        let mut call = self
            .client
            .post(self.config.endpoint())
            .timeout(request.timeout())
            .json(&body);
        if let Some(key) = &self.config.api_key {
            call = call.bearer_auth(key);
        }
        let response = call
            .send()
            .await
            .map_err(|e| transport_error(e, request.timeout()))?;
        let status = response.status();
        if !status.is_success() {
            let message = response.text().await.unwrap_or_default();
            return Err(ProviderError::Provider {
                status: Some(status.as_u16()),
                message: message.chars().take(500).collect(),
            });
        }
        let parsed: ChatResponse = response
            .json()
            .await
            .map_err(|e| transport_error(e, request.timeout()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Provider {
                status: Some(status.as_u16()),
                message: "response carried no message content".into(),
            })
    }

    fn name(&self) -> &str {
        "http"
    }
}
