//! Concurrent access to one tournament.
//!
//! All writes go through one mutex, so operations are applied in arrival
//! order. Provider calls happen outside the lock; the query is re-validated
//! and its rng draws taken only when the answer is committed.

use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use battle_llm::{Provider, ProviderError, ProviderRequest};
use tokio::sync::watch;

use crate::clock::Clock;
use crate::engine::{Engine, QueryKind, QueryOutcome, Tournament};
use crate::error::EngineError;
use crate::model::{Actor, TeamId, TournamentId};

pub struct TournamentHandle {
    id: TournamentId,
    engine: Mutex<Engine>,
    clock: Arc<dyn Clock>,
    provider: Arc<dyn Provider>,
    changes: watch::Sender<u64>,
}

impl TournamentHandle {
    pub fn new(engine: Engine, clock: Arc<dyn Clock>, provider: Arc<dyn Provider>) -> Self {
        let id = engine.state().id().clone();
        let (changes, _) = watch::channel(engine.state().next_sequence());
        Self {
            id,
            engine: Mutex::new(engine),
            clock,
            provider,
            changes,
        }
    }

    pub fn id(&self) -> &TournamentId {
        &self.id
    }

    pub fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    fn lock(&self) -> MutexGuard<'_, Engine> {
        self.engine.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Runs `f` against the latest committed state.
    pub fn read<R>(&self, f: impl FnOnce(&Tournament) -> R) -> R {
        f(self.lock().state())
    }

    /// Full journal bytes, header included.
    pub fn journal_bytes(&self) -> Vec<u8> {
        self.lock().journal().to_bytes()
    }

    /// Runs one write operation with the current time, after committing any
    /// due time-driven events. Subscribers are woken if anything changed.
    pub fn execute<R>(&self, f: impl FnOnce(&mut Engine, u64) -> Result<R, EngineError>) -> Result<R, EngineError> {
        let mut engine = self.lock();
        let before = engine.state().next_sequence();
        let now = self.clock.now_ms();
        let result = engine.tick(now).and_then(|_| f(&mut engine, now));
        let after = engine.state().next_sequence();
        drop(engine);
        if after != before {
            self.changes.send_replace(after);
        }
        result
    }

    pub fn tick(&self) -> Result<bool, EngineError> {
        self.execute(|_, _| Ok(()))?;
        Ok(true)
    }

    /// Receives the next sequence number after every commit.
    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.changes.subscribe()
    }

    /// Handles a query end to end: validate, ask the provider if needed,
    /// then commit the ledger entry.
    pub async fn query(&self, actor: &Actor, team_id: &TeamId, kind: QueryKind, text: &str) -> Result<QueryOutcome, EngineError> {
        let plan = self.execute(|engine, now| engine.plan_query(now, actor, team_id, kind, text))?;
        let provider_text = if plan.classification.needs_provider() {
            let settings = self.read(|t| t.config().provider.clone());
            let timeout = Duration::from_secs(settings.timeout_secs);
            let request = ProviderRequest::new(plan.text.clone(), settings.max_length, settings.temperature, timeout)
                .map_err(|e| EngineError::InvalidInput(e.to_string()))?;
            let answer = match tokio::time::timeout(timeout, self.provider.complete(&request)).await {
                Ok(answer) => answer?,
                Err(_) => return Err(ProviderError::Timeout(timeout).into()),
            };
            Some(answer)
        } else {
            None
        };
        self.execute(|engine, now| engine.answer_query(now, &plan, provider_text))
    }
}

impl std::fmt::Debug for TournamentHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TournamentHandle").field("id", &self.id).finish_non_exhaustive()
    }
}
