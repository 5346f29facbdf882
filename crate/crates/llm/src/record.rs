use std::path::Path;
use std::sync::{Arc, Mutex};

use async_trait::async_trait;

use crate::{Cassette, CassetteError, Provider, ProviderError, ProviderRequest};

/// Prompt/response pairs captured during a live session, in call order.
#[derive(Debug, Clone, Default)]
pub struct RecordSession {
    pairs: Arc<Mutex<Vec<(String, String)>>>,
}

impl RecordSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, prompt: &str, response: &str) {
        self.pairs
            .lock()
            .expect("record session poisoned")
            .push((prompt.to_owned(), response.to_owned()));
    }

    pub fn len(&self) -> usize {
        self.pairs.lock().expect("record session poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds the cassette; for repeated prompts the last response wins.
    pub fn to_cassette(&self) -> Cassette {
        let pairs = self.pairs.lock().expect("record session poisoned");
        pairs.iter().map(|(p, r)| (p.as_str(), r.clone())).collect()
    }

    pub fn record_cassette(&self, path: impl AsRef<Path>) -> Result<Cassette, CassetteError> {
        let cassette = self.to_cassette();
        cassette.save(path)?;
        Ok(cassette)
    }
}

/// Wraps a live provider and captures every successful exchange.
pub struct RecordingProvider<P> {
    inner: P,
    session: RecordSession,
}

impl<P: Provider> RecordingProvider<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            session: RecordSession::new(),
        }
    }

    pub fn session(&self) -> RecordSession {
        self.session.clone()
    }
}

#[async_trait]
impl<P: Provider> Provider for RecordingProvider<P> {
    async fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let response = self.inner.complete(request).await?;
        self.session.push(request.text(), &response);
        Ok(response)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
