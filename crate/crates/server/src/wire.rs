//! Request and response bodies. Every JSON body carries `"v": 1`.

use std::collections::BTreeMap;

use battle_core::ai_proxy::{ClaimVerdict, Mode};
use battle_core::model::{
    Actor, ClaimId, EntryResult, HintMark, Phase, QueryId, ReconEntryId, SubmissionId, TeamId, TournamentId, Verdict,
};
use battle_core::recon::{FeedEvent, PrivateResponse, ReconWindow};
use battle_core::scoring::ScoreEvent;
use battle_core::{Points, TournamentConfig};
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

fn version() -> u32 {
    VERSION
}

/// Wraps a body with the version field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    #[serde(default = "version")]
    pub v: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Envelope<T> {
    pub fn new(body: T) -> Self {
        Envelope { v: VERSION, body }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReply {
    pub error: ErrorBody,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Empty {}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub tournaments: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CreateTournament {
    #[serde(default)]
    pub config: TournamentConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TournamentCreated {
    pub tournament_id: TournamentId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TournamentList {
    pub tournaments: Vec<TournamentId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Admin,
    Judge,
    Team,
    Spectator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssueToken {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    /// Judge name recorded on verdicts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenIssued {
    pub token: String,
    pub principal: Actor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RevokeToken {
    pub token: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Revoked {
    pub revoked: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegisterTeam {
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeamRegistered {
    pub team_id: TeamId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseReply {
    pub phase: Phase,
}

/// Public view of a team.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamSummary {
    pub id: TeamId,
    pub name: String,
    pub puzzle_pieces: u32,
    pub entry_attempts_used: u32,
    pub round2_query_count: u32,
    pub recon_query_count: u32,
    pub active: bool,
    pub admitted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TournamentSummary {
    pub tournament_id: TournamentId,
    pub phase: Phase,
    pub clock_ms: u64,
    pub next_sequence: u64,
    pub teams: Vec<TeamSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<ReconWindow>,
    /// Configuration with `passcode` and `rng_seed` removed for non-admins.
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmitSolution {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    pub problem_id: String,
    pub payload: String,
    #[serde(default)]
    pub cited_hints: Vec<QueryId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubmissionFiled {
    pub submission_id: SubmissionId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeSolution {
    pub verdict: Verdict,
    #[serde(default)]
    pub hint_marks: BTreeMap<QueryId, HintMark>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreEvents {
    pub events: Vec<ScoreEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AwardPiece {
    pub team_id: TeamId,
    pub problem_id: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PieceAwarded {
    pub puzzle_pieces: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryAttempt {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    pub guess: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntryReply {
    pub result: EntryResult,
    pub attempts_used: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DuelQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    pub mode: Mode,
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_id: Option<String>,
    pub text: String,
}

/// What a team learns from a query. Deliberately has no truth fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReply {
    pub query_id: QueryId,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_entry_id: Option<ReconEntryId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileClaim {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_id: Option<TeamId>,
    pub query_id: QueryId,
    #[serde(default)]
    pub explanation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClaimReply {
    pub claim_id: ClaimId,
    pub verdict: ClaimVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowReply {
    pub opened_at: u64,
    pub closes_at: u64,
    pub duration_secs: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScorePresentation {
    pub team_id: TeamId,
    pub interaction_score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Round3Total {
    pub solution_score: f64,
    pub interaction_score: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    0.30
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TotalReply {
    pub total: Points,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedReply {
    pub events: Vec<FeedEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrivateReply {
    pub responses: Vec<PrivateResponse>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Listing<T> {
    pub items: Vec<T>,
}

/// Messages a client sends on the channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        token: String,
        #[serde(default)]
        from_sequence: u64,
        #[serde(default)]
        private_from: u64,
    },
    Ping,
}

/// Messages the server pushes on the channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Welcome { principal: Actor, phase: Phase, clock_ms: u64, next_sequence: u64 },
    Feed { event: FeedEvent },
    Private { response: PrivateResponse },
    Pong { clock_ms: u64 },
    Error { error: ErrorBody },
}
