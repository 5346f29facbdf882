//! Reconnaissance window, the public feed and per-team private responses.

use serde::{Deserialize, Serialize};

use crate::ai_proxy::{Mode, QueryRecord};
use crate::model::{Phase, QueryId, ReconEntryId, Round, TeamId};
use crate::scoring::ScoreRule;
use crate::Points;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowState {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconWindow {
    pub opened_at: u64,
    pub duration_secs: u64,
    pub state: WindowState,
    pub closed_at: Option<u64>,
}

impl ReconWindow {
    pub fn deadline(&self) -> u64 {
        self.opened_at + self.duration_secs * 1000
    }

    /// Whether a query arriving at `now` is inside the window.
    pub fn accepts(&self, now: u64) -> bool {
        self.state == WindowState::Open && now < self.deadline()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconEntry {
    pub id: ReconEntryId,
    pub team_id: TeamId,
    pub prompt_text: String,
    pub response_text: String,
    pub query_record_id: QueryId,
    pub timestamp: u64,
}

/// Public data only; nothing here may carry response text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum FeedPayload {
    PhaseChanged {
        from: Phase,
        to: Phase,
    },
    WindowOpened {
        opened_at: u64,
        closes_at: u64,
        duration_secs: u64,
    },
    WindowClosed {
        closed_at: u64,
    },
    PromptPosted {
        entry_id: ReconEntryId,
        team_id: TeamId,
        team_name: String,
        prompt: String,
    },
    ScoreChanged {
        team_id: TeamId,
        rule: ScoreRule,
        delta: Points,
        total: Points,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedEvent {
    pub sequence: u64,
    pub clock_ms: u64,
    #[serde(flatten)]
    pub payload: FeedPayload,
}

/// An answer delivered only to the team that asked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivateResponse {
    /// Position in the team's own stream, from 0.
    pub index: u64,
    pub query_id: QueryId,
    pub round: Round,
    pub mode: Mode,
    pub prompt: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_entry_id: Option<crate::model::ReconEntryId>,
    pub timestamp: u64,
}

impl PrivateResponse {
    pub fn from_record(index: u64, record: &QueryRecord) -> Self {
        PrivateResponse {
            index,
            query_id: record.id.clone(),
            round: record.round,
            mode: record.mode,
            prompt: record.query_text.clone(),
            answer: record.emitted_answer.clone(),
            recon_entry_id: record.recon_entry_id.clone(),
            timestamp: record.timestamp,
        }
    }
}
