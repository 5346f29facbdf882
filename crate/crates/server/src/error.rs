use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use battle_core::EngineError;

use crate::wire::{Envelope, ErrorBody, ErrorReply};

/// An error as sent over the wire: a status, a stable code and a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_owned(),
            message: message.into(),
        }
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthenticated", message)
    }

    pub fn auth_expired() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "AuthExpired", "token was revoked")
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    pub fn unsupported_version(v: u32) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "UnsupportedVersion", format!("version {v} is not supported"))
    }

    pub fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            code: self.code.clone(),
            message: self.message.clone(),
        }
    }
}

/// Transport status for every engine error.
pub fn status_of(error: &EngineError) -> StatusCode {
    use EngineError::*;
    match error {
        InvalidConfig { .. } | InvalidInput(_) | EmptyQuery | HintMarksMismatch | PendingVerdict | OutOfRange(_)
        | UnknownHintId(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Unauthorized(_) | ForeignQuery(_) | NotAdmitted(_) => StatusCode::FORBIDDEN,
        UnknownTournament(_) | UnknownTeam(_) | UnknownProblem(_) | UnknownSubmission(_) | UnknownQuery(_) => {
            StatusCode::NOT_FOUND
        }
        DuplicateName(_)
        | WrongPhase { .. }
        | AlreadyFinished
        | NotCorrect(_)
        | AlreadyAwarded(_)
        | PuzzleComplete
        | AlreadyJudged(_)
        | DuplicateSubmission(_)
        | AlreadyAdjudicated(_)
        | AlreadyOpened
        | WindowClosed
        | ReconCapReached(_)
        | AlreadyPresented(_) => StatusCode::CONFLICT,
        ProviderUnavailable(_) => StatusCode::BAD_GATEWAY,
        CorruptRecord { .. } | Journal(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<EngineError> for ApiError {
    fn from(error: EngineError) -> Self {
        ApiError {
            status: status_of(&error),
            code: error.code().to_owned(),
            message: error.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Envelope::new(ErrorReply { error: self.body() });
        (self.status, Json(body)).into_response()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use battle_core::model::Phase;
    use battle_llm::ProviderError;

    use super::*;

    #[test]
    fn every_engine_error_has_one_error_status() {
        let s = || String::from("x");
        let errors = vec![
            EngineError::InvalidConfig { field: s(), reason: s() },
            EngineError::InvalidInput(s()),
            EngineError::UnknownTournament(s()),
            EngineError::UnknownTeam(s()),
            EngineError::UnknownProblem(s()),
            EngineError::UnknownSubmission(s()),
            EngineError::UnknownQuery(s()),
            EngineError::DuplicateName(s()),
            EngineError::WrongPhase { actual: Phase::Round1, reason: s() },
            EngineError::Unauthorized(s()),
            EngineError::AlreadyFinished,
            EngineError::NotCorrect(s()),
            EngineError::AlreadyAwarded(s()),
            EngineError::PuzzleComplete,
            EngineError::AlreadyJudged(s()),
            EngineError::UnknownHintId(s()),
            EngineError::HintMarksMismatch,
            EngineError::PendingVerdict,
            EngineError::DuplicateSubmission(s()),
            EngineError::NotAdmitted(s()),
            EngineError::EmptyQuery,
            EngineError::ProviderUnavailable(ProviderError::CassetteMiss { digest: s() }),
            EngineError::ForeignQuery(s()),
            EngineError::AlreadyAdjudicated(s()),
            EngineError::AlreadyOpened,
            EngineError::WindowClosed,
            EngineError::ReconCapReached(s()),
            EngineError::AlreadyPresented(s()),
            EngineError::OutOfRange(battle_core::scoring::OutOfRange {
                name: "w",
                value: 2.0,
                min: 0.0,
                max: 1.0,
            }),
            EngineError::CorruptRecord { sequence: 0, reason: s() },
            EngineError::Journal(battle_core::journal::JournalError::BadHeader(s())),
        ];
        let mut table: BTreeMap<&str, StatusCode> = BTreeMap::new();
        for error in &errors {
            let status = status_of(error);
            assert!(status.is_client_error() || status.is_server_error());
            assert!(table.insert(error.code(), status).is_none(), "{} listed twice", error.code());
        }
        assert_eq!(table.len(), 31);
        assert_eq!(table["Unauthorized"], StatusCode::FORBIDDEN);
        assert_eq!(table["UnknownSubmission"], StatusCode::NOT_FOUND);
        assert_eq!(table["AlreadyJudged"], StatusCode::CONFLICT);
        assert_eq!(table["ProviderUnavailable"], StatusCode::BAD_GATEWAY);
    }
}
