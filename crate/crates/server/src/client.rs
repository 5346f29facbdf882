//! Typed client for the HTTP endpoints and the live channel.

use std::collections::BTreeMap;
use std::time::Duration;

use battle_core::ai_proxy::{DeceptionClaim, Mode, QueryRecord, TeamQueryView};
use battle_core::model::{HintMark, Phase, QueryId, Submission, SubmissionId, TeamId, TournamentId, Verdict};
use battle_core::recon::{FeedEvent, PrivateResponse};
use battle_core::scoring::{ScoreEvent, Scoreboard};
use battle_core::{Points, Presentation, TournamentConfig};
use futures::{SinkExt, StreamExt};
use reqwest::{RequestBuilder, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use crate::wire::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{status} {code}: {message}")]
    Api { status: u16, code: String, message: String },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("unexpected response: {0}")]
    Decode(String),
    #[error("channel: {0}")]
    Channel(String),
}

impl ClientError {
    /// The server's error code, if the server answered with one.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
    token: Option<String>,
}

impl Client {
    /// `base` is the server root such as `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
            token: None,
        }
    }

    /// Same server and connection pool, different credentials.
    pub fn with_token(&self, token: impl Into<String>) -> Self {
        Client {
            http: self.http.clone(),
            base: self.base.clone(),
            token: Some(token.into()),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn tournament(&self, tid: &TournamentId, rest: &str) -> String {
        self.url(&format!("/v1/tournaments/{tid}{rest}"))
    }

    fn authorize(&self, request: RequestBuilder) -> RequestBuilder {
        match &self.token {
            Some(token) => request.bearer_auth(token),
            None => request,
        }
    }

    async fn raw(&self, request: RequestBuilder) -> Result<reqwest::Response> {
        let response = self.authorize(request).send().await?;
        let status = response.status();
        if status.is_success() {
            return Ok(response);
        }
        let bytes = response.bytes().await?;
        Err(match serde_json::from_slice::<Envelope<ErrorReply>>(&bytes) {
            Ok(reply) => ClientError::Api {
                status: status.as_u16(),
                code: reply.body.error.code,
                message: reply.body.error.message,
            },
            Err(_) => ClientError::Api {
                status: status.as_u16(),
                code: status_code_name(status),
                message: String::from_utf8_lossy(&bytes).into_owned(),
            },
        })
    }

    async fn json<T: DeserializeOwned>(&self, request: RequestBuilder) -> Result<T> {
        let bytes = self.raw(request).await?.bytes().await?;
        let envelope: Envelope<T> =
            serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(format!("{e}: {}", String::from_utf8_lossy(&bytes))))?;
        if envelope.v != VERSION {
            return Err(ClientError::Decode(format!("unsupported version {}", envelope.v)));
        }
        Ok(envelope.body)
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, url: String, body: B) -> Result<T> {
        self.json(self.http.post(url).json(&Envelope::new(body))).await
    }

    async fn get<T: DeserializeOwned>(&self, url: String) -> Result<T> {
        self.json(self.http.get(url)).await
    }

    async fn text(&self, url: String) -> Result<String> {
        Ok(self.raw(self.http.get(url)).await?.text().await?)
    }

    pub async fn health(&self) -> Result<Health> {
        self.get(self.url("/v1/health")).await
    }

    pub async fn round3_total(&self, solution_score: f64, interaction_score: f64, weight: f64) -> Result<Points> {
        let body = Round3Total {
            solution_score,
            interaction_score,
            weight,
        };
        let reply: TotalReply = self.post(self.url("/v1/scoring/round3-total"), body).await?;
        Ok(reply.total)
    }

    pub async fn create_tournament(&self, config: TournamentConfig) -> Result<TournamentId> {
        let reply: TournamentCreated = self.post(self.url("/v1/tournaments"), CreateTournament { config }).await?;
        Ok(reply.tournament_id)
    }

    pub async fn list_tournaments(&self) -> Result<Vec<TournamentId>> {
        let reply: TournamentList = self.get(self.url("/v1/tournaments")).await?;
        Ok(reply.tournaments)
    }

    pub async fn issue_token(&self, tid: &TournamentId, request: IssueToken) -> Result<TokenIssued> {
        self.post(self.tournament(tid, "/tokens"), request).await
    }

    pub async fn team_token(&self, tid: &TournamentId, team: &TeamId) -> Result<String> {
        let request = IssueToken {
            role: Role::Team,
            team_id: Some(team.clone()),
            name: None,
        };
        Ok(self.issue_token(tid, request).await?.token)
    }

    pub async fn role_token(&self, tid: &TournamentId, role: Role, name: Option<&str>) -> Result<String> {
        let request = IssueToken {
            role,
            team_id: None,
            name: name.map(str::to_owned),
        };
        Ok(self.issue_token(tid, request).await?.token)
    }

    pub async fn revoke_token(&self, tid: &TournamentId, token: &str) -> Result<bool> {
        let reply: Revoked = self
            .post(self.tournament(tid, "/tokens/revoke"), RevokeToken { token: token.to_owned() })
            .await?;
        Ok(reply.revoked)
    }

    pub async fn summary(&self, tid: &TournamentId) -> Result<TournamentSummary> {
        self.get(self.tournament(tid, "")).await
    }

    pub async fn register_team(&self, tid: &TournamentId, name: &str) -> Result<TeamId> {
        let reply: TeamRegistered = self
            .post(self.tournament(tid, "/teams"), RegisterTeam { name: name.to_owned() })
            .await?;
        Ok(reply.team_id)
    }

    pub async fn teams(&self, tid: &TournamentId) -> Result<Vec<TeamSummary>> {
        let reply: Listing<TeamSummary> = self.get(self.tournament(tid, "/teams")).await?;
        Ok(reply.items)
    }

    pub async fn advance(&self, tid: &TournamentId) -> Result<Phase> {
        let reply: PhaseReply = self.post(self.tournament(tid, "/advance"), Empty {}).await?;
        Ok(reply.phase)
    }

    pub async fn submit(&self, tid: &TournamentId, problem_id: &str, payload: &str, cited_hints: &[QueryId]) -> Result<SubmissionId> {
        let body = SubmitSolution {
            team_id: None,
            problem_id: problem_id.to_owned(),
            payload: payload.to_owned(),
            cited_hints: cited_hints.to_vec(),
        };
        let reply: SubmissionFiled = self.post(self.tournament(tid, "/submissions"), body).await?;
        Ok(reply.submission_id)
    }

    pub async fn submissions(&self, tid: &TournamentId) -> Result<Vec<Submission>> {
        let reply: Listing<Submission> = self.get(self.tournament(tid, "/submissions")).await?;
        Ok(reply.items)
    }

    pub async fn judge(
        &self,
        tid: &TournamentId,
        submission: &SubmissionId,
        verdict: Verdict,
        hint_marks: BTreeMap<QueryId, HintMark>,
    ) -> Result<Vec<ScoreEvent>> {
        let reply: ScoreEvents = self
            .post(
                self.tournament(tid, &format!("/submissions/{submission}/judge")),
                JudgeSolution { verdict, hint_marks },
            )
            .await?;
        Ok(reply.events)
    }

    pub async fn award_piece(&self, tid: &TournamentId, team_id: &TeamId, problem_id: &str) -> Result<u32> {
        let body = AwardPiece {
            team_id: team_id.clone(),
            problem_id: problem_id.to_owned(),
        };
        let reply: PieceAwarded = self.post(self.tournament(tid, "/pieces"), body).await?;
        Ok(reply.puzzle_pieces)
    }

    pub async fn entry(&self, tid: &TournamentId, guess: &str) -> Result<EntryReply> {
        let body = EntryAttempt {
            team_id: None,
            guess: guess.to_owned(),
        };
        self.post(self.tournament(tid, "/entry"), body).await
    }

    pub async fn query(&self, tid: &TournamentId, mode: Mode, text: &str) -> Result<QueryReply> {
        let body = DuelQuery {
            team_id: None,
            mode,
            text: text.to_owned(),
        };
        self.post(self.tournament(tid, "/queries"), body).await
    }

    pub async fn recon_query(&self, tid: &TournamentId, problem_id: Option<&str>, text: &str) -> Result<QueryReply> {
        let body = ReconQuery {
            team_id: None,
            problem_id: problem_id.map(str::to_owned),
            text: text.to_owned(),
        };
        self.post(self.tournament(tid, "/recon/queries"), body).await
    }

    /// A team's own transcript.
    pub async fn transcript(&self, tid: &TournamentId) -> Result<Vec<TeamQueryView>> {
        let reply: Listing<TeamQueryView> = self.get(self.tournament(tid, "/queries")).await?;
        Ok(reply.items)
    }

    /// Full ledger records; judges and admins only.
    pub async fn query_records(&self, tid: &TournamentId) -> Result<Vec<QueryRecord>> {
        let reply: Listing<QueryRecord> = self.get(self.tournament(tid, "/queries")).await?;
        Ok(reply.items)
    }

    pub async fn claim(&self, tid: &TournamentId, query_id: &QueryId, explanation: &str) -> Result<ClaimReply> {
        let body = FileClaim {
            team_id: None,
            query_id: query_id.clone(),
            explanation: explanation.to_owned(),
        };
        self.post(self.tournament(tid, "/claims"), body).await
    }

    pub async fn claims(&self, tid: &TournamentId) -> Result<Vec<DeceptionClaim>> {
        let reply: Listing<DeceptionClaim> = self.get(self.tournament(tid, "/claims")).await?;
        Ok(reply.items)
    }

    pub async fn open_window(&self, tid: &TournamentId) -> Result<WindowReply> {
        self.post(self.tournament(tid, "/recon/open"), Empty {}).await
    }

    pub async fn score_presentation(&self, tid: &TournamentId, team_id: &TeamId, interaction_score: f64) -> Result<Presentation> {
        let body = ScorePresentation {
            team_id: team_id.clone(),
            interaction_score,
        };
        self.post(self.tournament(tid, "/presentations"), body).await
    }

    pub async fn presentations(&self, tid: &TournamentId) -> Result<Vec<Presentation>> {
        let reply: Listing<Presentation> = self.get(self.tournament(tid, "/presentations")).await?;
        Ok(reply.items)
    }

    pub async fn scoreboard(&self, tid: &TournamentId) -> Result<Scoreboard> {
        self.get(self.tournament(tid, "/scoreboard")).await
    }

    pub async fn scoreboard_csv(&self, tid: &TournamentId) -> Result<String> {
        self.text(self.tournament(tid, "/scoreboard?format=csv")).await
    }

    pub async fn score_events(&self, tid: &TournamentId) -> Result<Vec<ScoreEvent>> {
        let reply: Listing<ScoreEvent> = self.get(self.tournament(tid, "/score-events")).await?;
        Ok(reply.items)
    }

    /// Ledger export as JSON lines, in the variant the caller may see.
    pub async fn ledger(&self, tid: &TournamentId) -> Result<String> {
        self.text(self.tournament(tid, "/ledger")).await
    }

    pub async fn journal(&self, tid: &TournamentId) -> Result<Vec<u8>> {
        let response = self.raw(self.http.get(self.tournament(tid, "/journal"))).await?;
        Ok(response.bytes().await?.to_vec())
    }

    pub async fn feed(&self, tid: &TournamentId, from_sequence: u64) -> Result<Vec<FeedEvent>> {
        let reply: FeedReply = self
            .get(self.tournament(tid, &format!("/feed?from_sequence={from_sequence}")))
            .await?;
        Ok(reply.events)
    }

    pub async fn private(&self, tid: &TournamentId, from_index: u64) -> Result<Vec<PrivateResponse>> {
        let reply: PrivateReply = self
            .get(self.tournament(tid, &format!("/private?from_index={from_index}")))
            .await?;
        Ok(reply.responses)
    }

    /// Opens the live channel with this client's token.
    pub async fn channel(&self, tid: &TournamentId, from_sequence: u64, private_from: u64) -> Result<Channel> {
        let token = self
            .token
            .clone()
            .ok_or_else(|| ClientError::Channel("a token is required".into()))?;
        let url = self
            .tournament(tid, "/channel")
            .replacen("http://", "ws://", 1)
            .replacen("https://", "wss://", 1);
        let (stream, _) = tokio_tungstenite::connect_async(url)
            .await
            .map_err(|e| ClientError::Channel(e.to_string()))?;
        let mut channel = Channel { stream };
        channel
            .send(ClientMessage::Hello {
                token,
                from_sequence,
                private_from,
            })
            .await?;
        Ok(channel)
    }
}

fn status_code_name(status: StatusCode) -> String {
    status.canonical_reason().unwrap_or("Http").replace(' ', "")
}

pub struct Channel {
    stream: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl Channel {
    pub async fn send(&mut self, message: ClientMessage) -> Result<()> {
        let text = serde_json::to_string(&Envelope::new(message)).expect("client message serializes");
        self.stream
            .send(Message::text(text))
            .await
            .map_err(|e| ClientError::Channel(e.to_string()))
    }

    /// Next server message, or `None` once the server closes the channel.
    pub async fn next(&mut self) -> Option<Result<ServerMessage>> {
        loop {
            match self.stream.next().await? {
                Ok(Message::Text(text)) => {
                    return Some(
                        serde_json::from_str::<Envelope<ServerMessage>>(text.as_str())
                            .map(|e| e.body)
                            .map_err(|e| ClientError::Decode(e.to_string())),
                    )
                }
                Ok(Message::Close(_)) => return None,
                Ok(_) => continue,
                Err(e) => return Some(Err(ClientError::Channel(e.to_string()))),
            }
        }
    }

    /// Like [`Channel::next`] but gives up after `wait`.
    pub async fn next_within(&mut self, wait: Duration) -> Option<Result<ServerMessage>> {
        tokio::time::timeout(wait, self.next()).await.ok().flatten()
    }

    pub async fn close(mut self) {
        let _ = self.stream.close(None).await;
    }
}
