//! Provider-agnostic access to a text-generation backend.
//!
//! Every caller goes through [`Provider::complete`]. Tests and simulations use
//! [`MockProvider`], which answers strictly from a [`Cassette`] of recorded
//! prompt/response pairs and never fabricates text. [`RecordingProvider`]
//! captures a live session so it can be written out as a cassette.

mod cassette;
mod http;
mod mock;
mod record;

use std::time::Duration;

use async_trait::async_trait;
use thiserror::Error;

pub use cassette::{normalize_prompt, prompt_digest, Cassette, CassetteError, CASSETTE_VERSION};
pub use http::{HttpProvider, HttpProviderConfig};
pub use mock::MockProvider;
pub use record::{RecordSession, RecordingProvider};

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    prompt: String,
    max_length: u32,
    temperature: f32,
    timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidRequest {
    #[error("max_length must be positive")]
    ZeroMaxLength,
    #[error("timeout must be positive")]
    ZeroTimeout,
}

impl ProviderRequest {
    pub const DEFAULT_MAX_LENGTH: u32 = 512;
    pub const DEFAULT_TEMPERATURE: f32 = 0.7;
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

    pub fn new(
        prompt: impl Into<String>,
        max_length: u32,
        temperature: f32,
        timeout: Duration,
    ) -> Result<Self, InvalidRequest> {
        if max_length == 0 {
            return Err(InvalidRequest::ZeroMaxLength);
        }
        if timeout.is_zero() {
            return Err(InvalidRequest::ZeroTimeout);
        }
        Ok(Self {
            prompt: prompt.into(),
            max_length,
            temperature,
            timeout,
        })
    }

    /// Request with the default length, temperature and timeout.
    pub fn prompt(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            max_length: Self::DEFAULT_MAX_LENGTH,
            temperature: Self::DEFAULT_TEMPERATURE,
            timeout: Self::DEFAULT_TIMEOUT,
        }
    }

    pub fn text(&self) -> &str {
        &self.prompt
    }

    pub fn max_length(&self) -> u32 {
        self.max_length
    }

    pub fn temperature(&self) -> f32 {
        self.temperature
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider did not answer within {0:?}")]
    Timeout(Duration),
    #[error("provider error (status {status:?}): {message}")]
    Provider { status: Option<u16>, message: String },
    #[error("no cassette entry for prompt digest {digest}")]
    CassetteMiss { digest: String },
}

#[async_trait]
pub trait Provider: Send + Sync {
    async fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError>;

    /// Short label for logs.
    fn name(&self) -> &str;
}

#[async_trait]
impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    async fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        (**self).complete(request).await
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_invariants() {
        assert_eq!(
            ProviderRequest::new("x", 0, 0.0, Duration::from_secs(1)),
            Err(InvalidRequest::ZeroMaxLength)
        );
        assert_eq!(
            ProviderRequest::new("x", 10, 0.0, Duration::ZERO),
            Err(InvalidRequest::ZeroTimeout)
        );
        let req = ProviderRequest::prompt("hello");
        assert_eq!(req.max_length(), 512);
        assert_eq!(req.timeout(), Duration::from_secs(30));
    }
}
