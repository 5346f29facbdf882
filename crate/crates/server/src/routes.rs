use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use battle_core::ai_proxy::TeamQueryView;
use battle_core::handle::TournamentHandle;
use battle_core::model::{Actor, SubmissionId, TeamId, TournamentId};
use battle_core::{scoring, EngineError, QueryKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::wire::*;
use crate::AppState;

type ApiResult<T> = Result<Json<Envelope<T>>, ApiError>;

fn ok<T>(body: T) -> ApiResult<T> {
    Ok(Json(Envelope::new(body)))
}

/// JSON body that must declare `"v": 1`. An empty body counts as `{}`.
pub struct Versioned<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Versioned<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let mut value: serde_json::Value = if bytes.iter().all(u8::is_ascii_whitespace) {
            serde_json::json!({ "v": VERSION })
        } else {
            serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?
        };
        let object = value
            .as_object_mut()
            .ok_or_else(|| ApiError::bad_request("body must be a JSON object"))?;
        match object.remove("v").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(VERSION) => {}
            Some(v) => return Err(ApiError::unsupported_version(v as u32)),
            None => return Err(ApiError::bad_request("missing version field \"v\"")),
        }
        serde_json::from_value(value)
            .map(Versioned)
            .map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
    }
}

pub fn bearer(headers: &HeaderMap) -> Result<&str, ApiError> {
    let value = headers
        .get(header::AUTHORIZATION)
        .ok_or_else(|| ApiError::unauthenticated("missing bearer token"))?
        .to_str()
        .map_err(|_| ApiError::unauthenticated("malformed authorization header"))?;
    value
        .strip_prefix("Bearer ")
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::unauthenticated("expected a bearer token"))
}

fn session(state: &AppState, headers: &HeaderMap, tid: &str) -> Result<(Arc<TournamentHandle>, Actor), ApiError> {
    let tid = TournamentId(tid.to_owned());
    let session = state.tokens().authenticate(bearer(headers)?, Some(&tid))?;
    let handle = state.registry().get(&tid)?;
    Ok((handle, session.principal))
}

fn acting_team(actor: &Actor, explicit: Option<TeamId>) -> Result<TeamId, ApiError> {
    match (explicit, actor) {
        (Some(id), _) => Ok(id),
        (None, Actor::Team(id)) => Ok(id.clone()),
        _ => Err(EngineError::InvalidInput("team_id is required".into()).into()),
    }
}

fn require_admin(actor: &Actor) -> Result<(), ApiError> {
    match actor {
        Actor::Admin => Ok(()),
        _ => Err(EngineError::Unauthorized("admin only".into()).into()),
    }
}

fn io_error(e: std::io::Error) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "StorageError", e.to_string())
}

fn ndjson(text: impl Into<axum::body::Body>) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], text.into()).into_response()
}

pub fn router(state: AppState) -> Router {
    let t = "/v1/tournaments/{tid}";
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/scoring/round3-total", post(round3_total))
        .route("/v1/tournaments", post(create_tournament).get(list_tournaments))
        .route(t, get(summary))
        .route(&format!("{t}/tokens"), post(issue_token))
        .route(&format!("{t}/tokens/revoke"), post(revoke_token))
        .route(&format!("{t}/teams"), post(register_team).get(list_teams))
        .route(&format!("{t}/advance"), post(advance))
        .route(&format!("{t}/submissions"), post(submit).get(list_submissions))
        .route(&format!("{t}/submissions/{{sid}}/judge"), post(judge))
        .route(&format!("{t}/pieces"), post(award_piece))
        .route(&format!("{t}/entry"), post(entry))
        .route(&format!("{t}/queries"), post(duel_query).get(list_queries))
        .route(&format!("{t}/claims"), post(file_claim).get(list_claims))
        .route(&format!("{t}/recon/open"), post(open_window))
        .route(&format!("{t}/recon/queries"), post(recon_query))
        .route(&format!("{t}/presentations"), post(score_presentation).get(list_presentations))
        .route(&format!("{t}/scoreboard"), get(scoreboard))
        .route(&format!("{t}/score-events"), get(score_events))
        .route(&format!("{t}/ledger"), get(ledger))
        .route(&format!("{t}/journal"), get(journal))
        .route(&format!("{t}/feed"), get(feed))
        .route(&format!("{t}/private"), get(private))
        .route(&format!("{t}/channel"), get(crate::channel::upgrade))
        .fallback(|| async { ApiError::not_found() })
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> ApiResult<Health> {
    ok(Health {
        status: "ok".into(),
        tournaments: state.registry().ids().len(),
    })
}

async fn round3_total(Versioned(body): Versioned<Round3Total>) -> ApiResult<TotalReply> {
    let total = scoring::round3_total(body.solution_score, body.interaction_score, body.weight)
        .map_err(EngineError::from)?;
    ok(TotalReply { total })
}

async fn create_tournament(
    State(state): State<AppState>,
    headers: HeaderMap,
    Versioned(body): Versioned<CreateTournament>,
) -> Result<(StatusCode, Json<Envelope<TournamentCreated>>), ApiError> {
    state.tokens().authenticate(bearer(&headers)?, None)?;
    let handle = state.registry().create(body.config)?;
    Ok((
        StatusCode::CREATED,
        Json(Envelope::new(TournamentCreated {
            tournament_id: handle.id().clone(),
        })),
    ))
}

async fn list_tournaments(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<TournamentList> {
    state.tokens().authenticate(bearer(&headers)?, None)?;
    ok(TournamentList {
        tournaments: state.registry().ids(),
    })
}

pub(crate) fn team_summaries(t: &battle_core::Tournament) -> Vec<TeamSummary> {
    t.teams()
        .iter()
        .map(|team| TeamSummary {
            id: team.id.clone(),
            name: team.name.clone(),
            puzzle_pieces: team.puzzle_pieces,
            entry_attempts_used: team.entry_attempts_used,
            round2_query_count: team.round2_query_count,
            recon_query_count: team.recon_query_count,
            active: team.active,
            admitted: team.admitted,
        })
        .collect()
}

async fn summary(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> ApiResult<TournamentSummary> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    handle.tick()?;
    let reply = handle.read(|t| {
        let mut config = serde_json::to_value(t.config()).expect("config serializes");
        if actor != Actor::Admin {
            if let Some(map) = config.as_object_mut() {
                map.remove("passcode");
                map.remove("rng_seed");
            }
        }
        TournamentSummary {
            tournament_id: t.id().clone(),
            phase: t.phase(),
            clock_ms: handle.now().max(t.clock()),
            next_sequence: t.next_sequence(),
            teams: team_summaries(t),
            window: t.window().cloned(),
            config,
        }
    });
    ok(reply)
}

async fn issue_token(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<IssueToken>,
) -> ApiResult<TokenIssued> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    require_admin(&actor)?;
    let principal = match body.role {
        Role::Admin => Actor::Admin,
        Role::Spectator => Actor::Spectator,
        Role::Judge => Actor::Judge(body.name.unwrap_or_else(|| "judge".into())),
        Role::Team => {
            let team = body
                .team_id
                .ok_or_else(|| ApiError::from(EngineError::InvalidInput("team_id is required".into())))?;
            handle.read(|t| t.team(&team).map(|_| ()))?;
            Actor::Team(team)
        }
    };
    let token = state.tokens().issue(handle.id(), principal.clone()).map_err(io_error)?;
    ok(TokenIssued { token, principal })
}

async fn revoke_token(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<RevokeToken>,
) -> ApiResult<Revoked> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    require_admin(&actor)?;
    let revoked = state.tokens().revoke(handle.id(), &body.token).map_err(io_error)?;
    ok(Revoked { revoked })
}

async fn register_team(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<RegisterTeam>,
) -> ApiResult<TeamRegistered> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team_id = handle.execute(|e, now| e.register_team(now, &actor, &body.name))?;
    ok(TeamRegistered { team_id })
}

async fn list_teams(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> ApiResult<Listing<TeamSummary>> {
    let (handle, _) = session(&state, &headers, &tid)?;
    ok(Listing {
        items: handle.read(team_summaries),
    })
}

async fn advance(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(_): Versioned<Empty>,
) -> ApiResult<PhaseReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let phase = handle.execute(|e, now| e.advance_phase(now, &actor))?;
    ok(PhaseReply { phase })
}

async fn submit(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<SubmitSolution>,
) -> ApiResult<SubmissionFiled> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team = acting_team(&actor, body.team_id)?;
    let submission_id = handle.execute(|e, now| {
        e.submit_solution(now, &actor, &team, &body.problem_id, &body.payload, &body.cited_hints)
    })?;
    ok(SubmissionFiled { submission_id })
}

async fn list_submissions(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> Result<Response, ApiError> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let items = handle.read(|t| match &actor {
        Actor::Admin | Actor::Judge(_) => Ok(t.submissions().to_vec()),
        Actor::Team(team) => Ok(t.submissions().iter().filter(|s| &s.team_id == team).cloned().collect()),
        Actor::Spectator => Err(EngineError::Unauthorized("spectators cannot list submissions".into())),
    })?;
    Ok(Json(Envelope::new(Listing { items })).into_response())
}

async fn judge(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path((tid, sid)): Path<(String, String)>,
    Versioned(body): Versioned<JudgeSolution>,
) -> ApiResult<ScoreEvents> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let sid = SubmissionId(sid);
    let events = handle.execute(|e, now| e.judge_solution(now, &actor, &sid, body.verdict, &body.hint_marks))?;
    ok(ScoreEvents { events })
}

async fn award_piece(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<AwardPiece>,
) -> ApiResult<PieceAwarded> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let puzzle_pieces = handle.execute(|e, now| e.award_puzzle_piece(now, &actor, &body.team_id, &body.problem_id))?;
    ok(PieceAwarded { puzzle_pieces })
}

async fn entry(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<EntryAttempt>,
) -> ApiResult<EntryReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team = acting_team(&actor, body.team_id)?;
    let reply = handle.execute(|e, now| {
        let result = e.attempt_round2_entry(now, &actor, &team, &body.guess)?;
        let attempts_used = e.state().team(&team)?.entry_attempts_used;
        Ok(EntryReply { result, attempts_used })
    })?;
    ok(reply)
}

async fn duel_query(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<DuelQuery>,
) -> ApiResult<QueryReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team = acting_team(&actor, body.team_id)?;
    let outcome = handle
        .query(&actor, &team, QueryKind::Duel { mode: body.mode }, &body.text)
        .await?;
    ok(QueryReply {
        query_id: outcome.query_id,
        answer: outcome.answer,
        recon_entry_id: outcome.recon_entry_id,
    })
}

async fn recon_query(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<ReconQuery>,
) -> ApiResult<QueryReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team = acting_team(&actor, body.team_id)?;
    let kind = QueryKind::Recon {
        problem_id: body.problem_id,
    };
    let outcome = handle.query(&actor, &team, kind, &body.text).await?;
    ok(QueryReply {
        query_id: outcome.query_id,
        answer: outcome.answer,
        recon_entry_id: outcome.recon_entry_id,
    })
}

async fn list_queries(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> Result<Response, ApiError> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let response = handle.read(|t| match &actor {
        Actor::Admin | Actor::Judge(_) => Ok(Json(Envelope::new(Listing {
            items: t.queries().to_vec(),
        }))
        .into_response()),
        Actor::Team(team) => {
            let items: Vec<TeamQueryView> = t
                .queries()
                .iter()
                .filter(|q| &q.team_id == team)
                .map(TeamQueryView::from)
                .collect();
            Ok(Json(Envelope::new(Listing { items })).into_response())
        }
        Actor::Spectator => Err(EngineError::Unauthorized("spectators cannot list queries".into())),
    })?;
    Ok(response)
}

async fn file_claim(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<FileClaim>,
) -> ApiResult<ClaimReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let team = acting_team(&actor, body.team_id)?;
    let claim = handle.execute(|e, now| e.file_claim(now, &actor, &team, &body.query_id, &body.explanation))?;
    ok(ClaimReply {
        claim_id: claim.id,
        verdict: claim.verdict,
    })
}

async fn list_claims(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> Result<Response, ApiError> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let items = handle.read(|t| match &actor {
        Actor::Admin | Actor::Judge(_) => Ok(t.claims().to_vec()),
        Actor::Team(team) => Ok(t.claims().iter().filter(|c| &c.team_id == team).cloned().collect()),
        Actor::Spectator => Err(EngineError::Unauthorized("spectators cannot list claims".into())),
    })?;
    Ok(Json(Envelope::new(Listing { items })).into_response())
}

async fn open_window(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(_): Versioned<Empty>,
) -> ApiResult<WindowReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let window = handle.execute(|e, now| e.open_window(now, &actor))?;
    ok(WindowReply {
        opened_at: window.opened_at,
        closes_at: window.deadline(),
        duration_secs: window.duration_secs,
    })
}

async fn score_presentation(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Versioned(body): Versioned<ScorePresentation>,
) -> ApiResult<battle_core::Presentation> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let presentation =
        handle.execute(|e, now| e.score_presentation(now, &actor, &body.team_id, body.interaction_score))?;
    ok(presentation)
}

async fn list_presentations(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
) -> ApiResult<Listing<battle_core::Presentation>> {
    let (handle, _) = session(&state, &headers, &tid)?;
    ok(Listing {
        items: handle.read(|t| t.presentations().to_vec()),
    })
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn scoreboard(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let (handle, _) = session(&state, &headers, &tid)?;
    let board = handle.read(|t| t.scoreboard());
    match q.format.as_deref() {
        Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv")], board.to_csv()).into_response()),
        None | Some("json") => Ok(Json(Envelope::new(board)).into_response()),
        Some(other) => Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    }
}

async fn score_events(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
) -> ApiResult<Listing<scoring::ScoreEvent>> {
    let (handle, _) = session(&state, &headers, &tid)?;
    ok(Listing {
        items: handle.read(|t| t.score_events().to_vec()),
    })
}

async fn ledger(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> Result<Response, ApiError> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    if actor == Actor::Spectator {
        return Err(EngineError::Unauthorized("spectators cannot read the ledger".into()).into());
    }
    Ok(ndjson(handle.read(|t| t.ledger_export(&actor))))
}

async fn journal(State(state): State<AppState>, headers: HeaderMap, Path(tid): Path<String>) -> Result<Response, ApiError> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    require_admin(&actor)?;
    Ok(ndjson(handle.journal_bytes()))
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct FromQuery {
    from_sequence: Option<u64>,
    from_index: Option<u64>,
}

async fn feed(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Query(q): Query<FromQuery>,
) -> ApiResult<FeedReply> {
    let (handle, _) = session(&state, &headers, &tid)?;
    handle.tick()?;
    let from = q.from_sequence.unwrap_or(0);
    ok(FeedReply {
        events: handle.read(|t| t.feed_from(from).to_vec()),
    })
}

async fn private(
    State(state): State<AppState>,
    headers: HeaderMap,
    Path(tid): Path<String>,
    Query(q): Query<FromQuery>,
) -> ApiResult<PrivateReply> {
    let (handle, actor) = session(&state, &headers, &tid)?;
    let Actor::Team(team) = &actor else {
        return Err(EngineError::Unauthorized("private responses belong to teams".into()).into());
    };
    let from = q.from_index.unwrap_or(0) as usize;
    let responses = handle.read(|t| t.private_responses(team).into_iter().skip(from).collect());
    ok(PrivateReply { responses })
}
