use std::sync::Arc;

use async_trait::async_trait;

use crate::{prompt_digest, Cassette, Provider, ProviderError, ProviderRequest};

/// Answers only from a cassette; unknown prompts fail with
/// [`ProviderError::CassetteMiss`].
#[derive(Debug, Clone)]
pub struct MockProvider {
    cassette: Arc<Cassette>,
    failure: Option<ProviderError>,
}

impl MockProvider {
    pub fn new(cassette: Cassette) -> Self {
        Self {
            cassette: Arc::new(cassette),
            failure: None,
        }
    }

    /// A provider whose every call fails with `error`, for exercising outage
    /// handling.
    pub fn failing(error: ProviderError) -> Self {
        Self {
            cassette: Arc::new(Cassette::new()),
            failure: Some(error),
        }
    }

    pub fn cassette(&self) -> &Cassette {
        &self.cassette
    }
}

#[async_trait]
impl Provider for MockProvider {
    async fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        if let Some(error) = &self.failure {
            return Err(error.clone());
        }
        let digest = prompt_digest(request.text());
        self.cassette
            .lookup_digest(&digest)
            .map(str::to_owned)
            .ok_or(ProviderError::CassetteMiss { digest })
    }

    fn name(&self) -> &str {
        "mock"
    }
}
