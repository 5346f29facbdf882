//! The live channel: one WebSocket per session.
//!
//! The client opens with a `hello` carrying its token and resume cursors.
//! The server then sends everything from those cursors and keeps pushing as
//! the tournament changes. Public feed events go to every session; private
//! responses only to sessions of the owning team.

use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;
use battle_core::model::{Actor, TournamentId};

use crate::error::ApiError;
use crate::wire::{ClientMessage, Envelope, ServerMessage};
use crate::AppState;

const HELLO_TIMEOUT: Duration = Duration::from_secs(10);
const AUTH_RECHECK: Duration = Duration::from_millis(500);

pub async fn upgrade(ws: WebSocketUpgrade, State(state): State<AppState>, Path(tid): Path<String>) -> Response {
    ws.on_upgrade(move |socket| run(socket, state, TournamentId(tid)))
}

async fn send(socket: &mut WebSocket, message: ServerMessage) -> bool {
    let text = serde_json::to_string(&Envelope::new(message)).expect("server message serializes");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn fail(mut socket: WebSocket, error: ApiError) {
    send(&mut socket, ServerMessage::Error { error: error.body() }).await;
    let _ = socket.send(Message::Close(None)).await;
}

fn parse(text: &str) -> Result<ClientMessage, ApiError> {
    let envelope: Envelope<ClientMessage> =
        serde_json::from_str(text).map_err(|e| ApiError::bad_request(format!("bad channel message: {e}")))?;
    if envelope.v != crate::wire::VERSION {
        return Err(ApiError::unsupported_version(envelope.v));
    }
    Ok(envelope.body)
}

async fn run(mut socket: WebSocket, state: AppState, tid: TournamentId) {
    let first = match tokio::time::timeout(HELLO_TIMEOUT, socket.recv()).await {
        Ok(Some(Ok(Message::Text(text)))) => parse(text.as_str()),
        Ok(_) => return,
        Err(_) => Err(ApiError::bad_request("no hello received")),
    };
    let (token, mut next_sequence, mut next_private) = match first {
        Ok(ClientMessage::Hello {
            token,
            from_sequence,
            private_from,
        }) => (token, from_sequence, private_from),
        Ok(ClientMessage::Ping) => return fail(socket, ApiError::bad_request("expected hello")).await,
        Err(e) => return fail(socket, e).await,
    };
    let principal = match state.tokens().authenticate(&token, Some(&tid)) {
        Ok(session) => session.principal,
        Err(e) => return fail(socket, e).await,
    };
    let handle = match state.registry().get(&tid) {
        Ok(handle) => handle,
        Err(e) => return fail(socket, e.into()).await,
    };
    let mut changes = handle.subscribe();
    let welcome = handle.read(|t| ServerMessage::Welcome {
        principal: principal.clone(),
        phase: t.phase(),
        clock_ms: handle.now().max(t.clock()),
        next_sequence: t.next_sequence(),
    });
    if !send(&mut socket, welcome).await {
        return;
    }
    let team = match &principal {
        Actor::Team(team) => Some(team.clone()),
        _ => None,
    };
    let mut recheck = tokio::time::interval(AUTH_RECHECK);
    loop {
        changes.borrow_and_update();
        let (feed, private) = handle.read(|t| {
            let feed = t.feed_from(next_sequence).to_vec();
            let private = match &team {
                Some(team) => t.private_responses(team).into_iter().skip(next_private as usize).collect(),
                None => Vec::new(),
            };
            (feed, private)
        });
        for event in feed {
            next_sequence = event.sequence + 1;
            if !send(&mut socket, ServerMessage::Feed { event }).await {
                return;
            }
        }
        for response in private {
            next_private = response.index + 1;
            if !send(&mut socket, ServerMessage::Private { response }).await {
                return;
            }
        }
        tokio::select! {
            changed = changes.changed() => {
                if changed.is_err() {
                    break;
                }
            }
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => match parse(text.as_str()) {
                    Ok(ClientMessage::Ping) => {
                        if !send(&mut socket, ServerMessage::Pong { clock_ms: handle.now() }).await {
                            return;
                        }
                    }
                    Ok(ClientMessage::Hello { from_sequence, private_from, .. }) => {
                        next_sequence = from_sequence;
                        next_private = private_from;
                    }
                    Err(e) => {
                        if !send(&mut socket, ServerMessage::Error { error: e.body() }).await {
                            return;
                        }
                    }
                },
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
            _ = recheck.tick() => {
                if let Err(e) = state.tokens().authenticate(&token, Some(&tid)) {
                    return fail(socket, e).await;
                }
            }
        }
    }
}
