use battle_llm::ProviderError;
use thiserror::Error;

use crate::journal::JournalError;
use crate::model::Phase;
use crate::scoring::OutOfRange;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid config field {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unknown tournament {0}")]
    UnknownTournament(String),
    #[error("unknown team {0}")]
    UnknownTeam(String),
    #[error("unknown problem {0}")]
    UnknownProblem(String),
    #[error("unknown submission {0}")]
    UnknownSubmission(String),
    #[error("unknown query {0}")]
    UnknownQuery(String),
    #[error("team name {0:?} is already taken")]
    DuplicateName(String),
    #[error("not allowed in phase {actual}: {reason}")]
    WrongPhase { actual: Phase, reason: String },
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("tournament is already finished")]
    AlreadyFinished,
    #[error("submission for {0} was not judged Correct")]
    NotCorrect(String),
    #[error("piece for {0} was already awarded")]
    AlreadyAwarded(String),
    #[error("the puzzle is already complete")]
    PuzzleComplete,
    #[error("submission {0} was already judged")]
    AlreadyJudged(String),
    #[error("{0} is not one of the team's own query records")]
    UnknownHintId(String),
    #[error("hint marks must cover exactly the cited hints")]
    HintMarksMismatch,
    #[error("a verdict of Pending cannot be recorded")]
    PendingVerdict,
    #[error("an open submission for {0} already exists")]
    DuplicateSubmission(String),
    #[error("team {0} is not admitted")]
    NotAdmitted(String),
    #[error("query text is empty")]
    EmptyQuery,
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(#[from] ProviderError),
    #[error("query {0} belongs to another team")]
    ForeignQuery(String),
    #[error("query {0} already has an adjudicated claim from this team")]
    AlreadyAdjudicated(String),
    #[error("the reconnaissance window was already opened")]
    AlreadyOpened,
    #[error("the reconnaissance window is closed")]
    WindowClosed,
    #[error("team {0} reached the reconnaissance query cap")]
    ReconCapReached(String),
    #[error("presentation for team {0} was already scored")]
    AlreadyPresented(String),
    #[error(transparent)]
    OutOfRange(#[from] OutOfRange),
    #[error("corrupt journal record {sequence}: {reason}")]
    CorruptRecord { sequence: u64, reason: String },
    #[error(transparent)]
    Journal(#[from] JournalError),
}

impl EngineError {
    /// Stable machine-readable name used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidConfig { .. } => "InvalidConfig",
            EngineError::InvalidInput(_) => "InvalidInput",
            EngineError::UnknownTournament(_) => "UnknownTournament",
            EngineError::UnknownTeam(_) => "UnknownTeam",
            EngineError::UnknownProblem(_) => "UnknownProblem",
            EngineError::UnknownSubmission(_) => "UnknownSubmission",
            EngineError::UnknownQuery(_) => "UnknownQuery",
            EngineError::DuplicateName(_) => "DuplicateName",
            EngineError::WrongPhase { .. } => "WrongPhase",
            EngineError::Unauthorized(_) => "Unauthorized",
            EngineError::AlreadyFinished => "AlreadyFinished",
            EngineError::NotCorrect(_) => "NotCorrect",
            EngineError::AlreadyAwarded(_) => "AlreadyAwarded",
            EngineError::PuzzleComplete => "PuzzleComplete",
            EngineError::AlreadyJudged(_) => "AlreadyJudged",
            EngineError::UnknownHintId(_) => "UnknownHintId",
            EngineError::HintMarksMismatch => "HintMarksMismatch",
            EngineError::PendingVerdict => "PendingVerdict",
            EngineError::DuplicateSubmission(_) => "DuplicateSubmission",
            EngineError::NotAdmitted(_) => "NotAdmitted",
            EngineError::EmptyQuery => "EmptyQuery",
            EngineError::ProviderUnavailable(_) => "ProviderUnavailable",
            EngineError::ForeignQuery(_) => "ForeignQuery",
            EngineError::AlreadyAdjudicated(_) => "AlreadyAdjudicated",
            EngineError::AlreadyOpened => "AlreadyOpened",
            EngineError::WindowClosed => "WindowClosed",
            EngineError::ReconCapReached(_) => "ReconCapReached",
            EngineError::AlreadyPresented(_) => "AlreadyPresented",
            EngineError::OutOfRange(_) => "OutOfRange",
            EngineError::CorruptRecord { .. } => "CorruptRecord",
            EngineError::Journal(_) => "JournalError",
        }
    }

    pub(crate) fn wrong_phase(actual: Phase, reason: impl Into<String>) -> Self {
        EngineError::WrongPhase {
            actual,
            reason: reason.into(),
        }
    }
}
