//! Tournament state and the rules that change it.
//!
//! Every operation first validates against the current state and returns the
//! journal event(s) it would cause, without mutating anything. State only
//! changes in [`Tournament::apply`], which is also what replay uses, so a live
//! tournament and its replayed journal go through the same code.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ai_proxy::{self, ClaimVerdict, DeceptionClaim, LedgerVariant, Mode, QueryRecord, Routing};
use crate::config::TournamentConfig;
use crate::error::EngineError;
use crate::journal::{JournalEvent, JournalRecord, JournalSink};
use crate::model::{
    Actor, ClaimId, EntryResult, HintMark, Phase, QueryId, ReconEntryId, Round, ScoreEventId, Submission,
    SubmissionId, Team, TeamId, TournamentId, Verdict,
};
use crate::recon::{FeedEvent, FeedPayload, PrivateResponse, ReconEntry, ReconWindow, WindowState};
use crate::rng::{seeded, RecordingRng, TournamentRng};
use crate::scoring::{self, Award, ScoreEvent, ScoreRule, Scoreboard};
use crate::Points;

/// Inputs and result of one Round-3 presentation score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Presentation {
    pub team_id: TeamId,
    pub solution_raw: Points,
    pub solution_max: Points,
    pub solution_score: f64,
    pub interaction_score: f64,
    pub weight: f64,
    pub total: Points,
}

/// Which assistant surface a query goes to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "snake_case")]
pub enum QueryKind {
    /// Round-2 duel (or Round-3 solving when enabled); the team picks the mode.
    Duel { mode: Mode },
    /// Reconnaissance window; the mode comes from configuration.
    Recon {
        #[serde(default)]
        problem_id: Option<String>,
    },
}

/// A validated query waiting for its provider answer.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    pub team_id: TeamId,
    pub kind: QueryKind,
    pub mode: Mode,
    pub round: Round,
    pub problem_id: Option<String>,
    pub text: String,
    pub classification: ai_proxy::Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: QueryId,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_entry_id: Option<ReconEntryId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tournament {
    id: TournamentId,
    config: TournamentConfig,
    phase: Phase,
    clock: u64,
    next_sequence: u64,
    teams: Vec<Team>,
    submissions: Vec<Submission>,
    queries: Vec<QueryRecord>,
    claims: Vec<DeceptionClaim>,
    score_events: Vec<ScoreEvent>,
    totals: BTreeMap<TeamId, Points>,
    window: Option<ReconWindow>,
    recon_entries: Vec<ReconEntry>,
    presentations: Vec<Presentation>,
    feed: Vec<FeedEvent>,
    rng: TournamentRng,
}

fn corrupt(sequence: u64, reason: impl Into<String>) -> EngineError {
    EngineError::CorruptRecord {
        sequence,
        reason: reason.into(),
    }
}

fn judge_name(actor: &Actor) -> Result<String, EngineError> {
    match actor {
        Actor::Judge(name) => Ok(name.clone()),
        Actor::Admin => Ok("admin".into()),
        _ => Err(EngineError::Unauthorized("judge role required".into())),
    }
}

fn require_admin(actor: &Actor) -> Result<(), EngineError> {
    match actor {
        Actor::Admin => Ok(()),
        _ => Err(EngineError::Unauthorized("admin role required".into())),
    }
}

impl Tournament {
    /// The first journal event of a new tournament.
    pub fn created_event(id: TournamentId, config: TournamentConfig) -> Result<JournalEvent, EngineError> {
        config.validate()?;
        Ok(JournalEvent::Created {
            tournament_id: id,
            config,
        })
    }

    pub fn from_created(record: &JournalRecord) -> Result<Self, EngineError> {
        if record.sequence != 0 {
            return Err(corrupt(record.sequence, "Created must be record 0"));
        }
        let JournalEvent::Created { tournament_id, config } = &record.event else {
            return Err(corrupt(0, format!("first record is {}, not Created", record.event.kind())));
        };
        config
            .validate()
            .map_err(|e| corrupt(0, format!("invalid config: {e}")))?;
        Ok(Tournament {
            id: tournament_id.clone(),
            config: config.clone(),
            phase: Phase::Registration,
            clock: record.timestamp,
            next_sequence: 1,
            teams: Vec::new(),
            submissions: Vec::new(),
            queries: Vec::new(),
            claims: Vec::new(),
            score_events: Vec::new(),
            totals: BTreeMap::new(),
            window: None,
            recon_entries: Vec::new(),
            presentations: Vec::new(),
            feed: Vec::new(),
            rng: seeded(config.rng_seed),
        })
    }

    pub fn id(&self) -> &TournamentId {
        &self.id
    }

    pub fn config(&self) -> &TournamentConfig {
        &self.config
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Timestamp of the latest record.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn next_sequence(&self) -> u64 {
        self.next_sequence
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn team(&self, id: &TeamId) -> Result<&Team, EngineError> {
        self.teams
            .iter()
            .find(|t| &t.id == id)
            .ok_or_else(|| EngineError::UnknownTeam(id.to_string()))
    }

    pub fn team_by_name(&self, name: &str) -> Option<&Team> {
        self.teams.iter().find(|t| t.name == name)
    }

    pub fn submissions(&self) -> &[Submission] {
        &self.submissions
    }

    pub fn submission(&self, id: &SubmissionId) -> Result<&Submission, EngineError> {
        self.submissions
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| EngineError::UnknownSubmission(id.to_string()))
    }

    pub fn queries(&self) -> &[QueryRecord] {
        &self.queries
    }

    pub fn query(&self, id: &QueryId) -> Result<&QueryRecord, EngineError> {
        self.queries
            .iter()
            .find(|q| &q.id == id)
            .ok_or_else(|| EngineError::UnknownQuery(id.to_string()))
    }

    pub fn claims(&self) -> &[DeceptionClaim] {
        &self.claims
    }

    pub fn score_events(&self) -> &[ScoreEvent] {
        &self.score_events
    }

    pub fn window(&self) -> Option<&ReconWindow> {
        self.window.as_ref()
    }

    pub fn recon_entries(&self) -> &[ReconEntry] {
        &self.recon_entries
    }

    pub fn presentations(&self) -> &[Presentation] {
        &self.presentations
    }

    pub fn feed(&self) -> &[FeedEvent] {
        &self.feed
    }

    pub fn feed_from(&self, from_sequence: u64) -> &[FeedEvent] {
        let start = (from_sequence as usize).min(self.feed.len());
        &self.feed[start..]
    }

    pub fn scoreboard(&self) -> Scoreboard {
        Scoreboard::build(
            self.teams.iter().map(|t| (&t.id, t.name.as_str())),
            &self.score_events,
        )
    }

    /// The team's own answers, in the order they were given.
    pub fn private_responses(&self, team: &TeamId) -> Vec<PrivateResponse> {
        self.queries
            .iter()
            .filter(|q| &q.team_id == team)
            .enumerate()
            .map(|(i, q)| PrivateResponse::from_record(i as u64, q))
            .collect()
    }

    /// Ledger as visible to `actor`: judges and admins get every full record,
    /// teams get only their own queries without truth metadata, spectators
    /// get nothing.
    pub fn ledger_export(&self, actor: &Actor) -> String {
        match actor {
            Actor::Admin | Actor::Judge(_) => ai_proxy::export_ledger(&self.queries, LedgerVariant::Judge),
            Actor::Team(team) => ai_proxy::export_ledger(
                self.queries.iter().filter(|q| &q.team_id == team),
                LedgerVariant::Team,
            ),
            Actor::Spectator => String::new(),
        }
    }

    /// Commit timestamp for an operation arriving at `now`.
    pub fn stamp(&self, now: u64) -> u64 {
        now.max(self.clock)
    }

    fn next_score_id(&self, offset: usize) -> ScoreEventId {
        ScoreEventId::from_index(self.score_events.len() + offset)
    }

    fn score_event(&self, offset: usize, team: &TeamId, award: Award, source: String, at: u64) -> ScoreEvent {
        ScoreEvent {
            id: self.next_score_id(offset),
            team_id: team.clone(),
            rule: award.0,
            delta: award.1,
            source_ref: source,
            timestamp: at,
        }
    }

    fn authorize_team<'a>(&'a self, actor: &Actor, team: &TeamId) -> Result<&'a Team, EngineError> {
        match actor {
            Actor::Admin => {}
            Actor::Team(own) if own == team => {}
            _ => return Err(EngineError::Unauthorized(format!("cannot act for team {team}"))),
        }
        self.team(team)
    }

    pub fn register_team(&self, actor: &Actor, name: &str) -> Result<JournalEvent, EngineError> {
        require_admin(actor)?;
        if self.phase != Phase::Registration {
            return Err(EngineError::wrong_phase(self.phase, "teams register before Round 1"));
        }
        let name = name.trim();
        if name.is_empty() {
            return Err(EngineError::InvalidInput("team name must not be empty".into()));
        }
        if self.team_by_name(name).is_some() {
            return Err(EngineError::DuplicateName(name.to_owned()));
        }
        Ok(JournalEvent::TeamRegistered {
            team_id: TeamId::from_index(self.teams.len()),
            name: name.to_owned(),
        })
    }

    /// Moves to the next phase, together with the side effects of leaving
    /// the current one.
    pub fn advance_phase(&self, actor: &Actor, now: u64) -> Result<Vec<JournalEvent>, EngineError> {
        require_admin(actor)?;
        let to = self.phase.successor().ok_or(EngineError::AlreadyFinished)?;
        let at = self.stamp(now);
        let mut events = Vec::new();
        if let Some(window) = self.window.as_ref().filter(|w| w.state == WindowState::Open) {
            events.push(JournalEvent::WindowClosed {
                closed_at: at.min(window.deadline()),
            });
        }
        let deactivated = if self.phase == Phase::Round1 {
            self.teams
                .iter()
                .filter(|t| t.active && !t.admitted)
                .map(|t| t.id.clone())
                .collect()
        } else {
            Vec::new()
        };
        let mut penalties = Vec::new();
        if self.phase == Phase::Round2 {
            for team in self.teams.iter().filter(|t| t.active) {
                let penalty = scoring::apply_quota_penalty(
                    team.round2_query_count,
                    self.config.quota_min_queries,
                    self.config.quota_penalty_per_missing,
                );
                if let Some(delta) = penalty.filter(|d| *d != Points::ZERO) {
                    let event = self.score_event(
                        penalties.len(),
                        &team.id,
                        (ScoreRule::QuotaPenalty, delta),
                        team.id.to_string(),
                        at,
                    );
                    penalties.push(event);
                }
            }
        }
        events.push(JournalEvent::PhaseChanged {
            from: self.phase,
            to,
            deactivated,
            penalties,
        });
        Ok(events)
    }

    pub fn submit_solution(
        &self,
        actor: &Actor,
        team_id: &TeamId,
        problem_id: &str,
        payload: &str,
        cited_hints: &[QueryId],
        now: u64,
    ) -> Result<JournalEvent, EngineError> {
        let team = self.authorize_team(actor, team_id)?;
        let problem = self
            .config
            .problem(problem_id)
            .ok_or_else(|| EngineError::UnknownProblem(problem_id.to_owned()))?;
        if self.phase.submission_round() != Some(problem.round) {
            return Err(EngineError::wrong_phase(
                self.phase,
                format!("{:?} problems are not open for submission", problem.round),
            ));
        }
        if !team.active {
            return Err(EngineError::NotAdmitted(team_id.to_string()));
        }
        let open = self
            .submissions
            .iter()
            .any(|s| &s.team_id == team_id && s.problem_id == problem_id && s.verdict != Verdict::Incorrect);
        if open {
            return Err(EngineError::DuplicateSubmission(problem_id.to_owned()));
        }
        let mut hints = Vec::new();
        for hint in cited_hints {
            let own = self.queries.iter().any(|q| &q.id == hint && &q.team_id == team_id);
            if !own {
                return Err(EngineError::UnknownHintId(hint.to_string()));
            }
            if !hints.contains(hint) {
                hints.push(hint.clone());
            }
        }
        Ok(JournalEvent::SubmissionFiled {
            submission: Submission {
                id: SubmissionId::from_index(self.submissions.len()),
                team_id: team_id.clone(),
                problem_id: problem_id.to_owned(),
                round: problem.round,
                payload: payload.to_owned(),
                cited_hints: hints,
                verdict: Verdict::Pending,
                hint_marks: BTreeMap::new(),
                judge: None,
                filed_at: self.stamp(now),
                judged_at: None,
            },
        })
    }

    pub fn judge_solution(
        &self,
        actor: &Actor,
        submission_id: &SubmissionId,
        verdict: Verdict,
        hint_marks: &BTreeMap<QueryId, HintMark>,
        now: u64,
    ) -> Result<JournalEvent, EngineError> {
        let judge = judge_name(actor)?;
        let submission = self.submission(submission_id)?;
        if verdict == Verdict::Pending {
            return Err(EngineError::PendingVerdict);
        }
        if submission.verdict != Verdict::Pending {
            return Err(EngineError::AlreadyJudged(submission_id.to_string()));
        }
        let cited: BTreeSet<&QueryId> = submission.cited_hints.iter().collect();
        let marked: BTreeSet<&QueryId> = hint_marks.keys().collect();
        if cited != marked {
            return Err(EngineError::HintMarksMismatch);
        }
        let at = self.stamp(now);
        let mut events = Vec::new();
        let scores_solution = match submission.round {
            Round::R1 => self.config.round1_scores_count,
            Round::R2 => true,
            Round::R3 => false,
        };
        if scores_solution {
            if let Some(award) = scoring::score_solution(verdict) {
                events.push(self.score_event(0, &submission.team_id, award, submission_id.to_string(), at));
            }
        }
        if submission.round == Round::R2 {
            for hint in &submission.cited_hints {
                let falsified = self.query(hint)?.falsified;
                if let Some(award) = scoring::score_hint_use(hint_marks[hint], falsified) {
                    let event = self.score_event(events.len(), &submission.team_id, award, hint.to_string(), at);
                    events.push(event);
                }
            }
        }
        Ok(JournalEvent::Judged {
            submission_id: submission_id.clone(),
            judge,
            verdict,
            hint_marks: hint_marks.clone(),
            events,
        })
    }

    pub fn award_puzzle_piece(&self, actor: &Actor, team_id: &TeamId, problem_id: &str) -> Result<JournalEvent, EngineError> {
        judge_name(actor)?;
        if self.phase != Phase::Round1 {
            return Err(EngineError::wrong_phase(self.phase, "pieces are awarded in Round 1"));
        }
        let team = self.team(team_id)?;
        if team.awarded_problems.iter().any(|p| p == problem_id) {
            return Err(EngineError::AlreadyAwarded(problem_id.to_owned()));
        }
        let correct = self.submissions.iter().any(|s| {
            &s.team_id == team_id && s.problem_id == problem_id && s.round == Round::R1 && s.verdict == Verdict::Correct
        });
        if !correct {
            return Err(EngineError::NotCorrect(problem_id.to_owned()));
        }
        if team.puzzle_pieces >= self.config.puzzle_piece_count {
            return Err(EngineError::PuzzleComplete);
        }
        Ok(JournalEvent::PieceAwarded {
            team_id: team_id.clone(),
            problem_id: problem_id.to_owned(),
            pieces: team.puzzle_pieces + 1,
        })
    }

    pub fn attempt_round2_entry(&self, actor: &Actor, team_id: &TeamId, guess: &str) -> Result<JournalEvent, EngineError> {
        let team = self.authorize_team(actor, team_id)?;
        if self.phase != Phase::Round1 {
            return Err(EngineError::wrong_phase(self.phase, "entry attempts happen in Round 1"));
        }
        let max = self.config.max_entry_attempts;
        let (result, attempts_used) = if team.admitted {
            (EntryResult::Admitted, team.entry_attempts_used)
        } else if team.entry_attempts_used >= max {
            (EntryResult::LockedOut, team.entry_attempts_used)
        } else if team.puzzle_pieces == self.config.puzzle_piece_count && guess == self.config.passcode {
            (EntryResult::Admitted, team.entry_attempts_used)
        } else {
            let used = team.entry_attempts_used + 1;
            let result = if used >= max {
                EntryResult::LockedOut
            } else {
                EntryResult::Rejected
            };
            (result, used)
        };
        Ok(JournalEvent::EntryAttempt {
            team_id: team_id.clone(),
            result,
            attempts_used,
        })
    }

    /// Checks that `team_id` may ask `text` right now and classifies it.
    pub fn plan_query(
        &self,
        actor: &Actor,
        team_id: &TeamId,
        kind: QueryKind,
        text: &str,
        now: u64,
    ) -> Result<QueryPlan, EngineError> {
        match actor {
            Actor::Team(own) if own == team_id => {}
            _ => return Err(EngineError::Unauthorized("only the team itself may query".into())),
        }
        self.validate_query(team_id, kind, text, now)
    }

    fn validate_query(&self, team_id: &TeamId, kind: QueryKind, text: &str, now: u64) -> Result<QueryPlan, EngineError> {
        let team = self.team(team_id)?;
        let (mode, round, problem_id) = match &kind {
            QueryKind::Duel { mode } => {
                let round = match self.phase {
                    Phase::Round2 => Round::R2,
                    Phase::Round3Solve if self.config.ai_access_in_round3_solve => Round::R3,
                    _ => return Err(EngineError::wrong_phase(self.phase, "the assistant is not available")),
                };
                if !(team.admitted && team.active) {
                    return Err(EngineError::NotAdmitted(team_id.to_string()));
                }
                (*mode, round, None)
            }
            QueryKind::Recon { problem_id } => {
                if self.phase != Phase::Round3Recon {
                    return Err(EngineError::wrong_phase(self.phase, "reconnaissance happens in Round 3"));
                }
                match &self.window {
                    Some(window) if window.accepts(self.stamp(now)) => {}
                    _ => return Err(EngineError::WindowClosed),
                }
                if !team.active {
                    return Err(EngineError::NotAdmitted(team_id.to_string()));
                }
                if let Some(cap) = self.config.recon_query_cap {
                    if team.recon_query_count >= cap {
                        return Err(EngineError::ReconCapReached(team_id.to_string()));
                    }
                }
                let mode = match problem_id {
                    Some(id) => {
                        let problem = self
                            .config
                            .problem(id)
                            .ok_or_else(|| EngineError::UnknownProblem(id.clone()))?;
                        problem.recon_mode.unwrap_or(self.config.recon_mode)
                    }
                    None => self.config.recon_mode,
                };
                (mode, Round::R3, problem_id.clone())
            }
        };
        let classification = ai_proxy::classify_query(text, mode, self.config.simple_operator_limit)?;
        Ok(QueryPlan {
            team_id: team_id.clone(),
            kind,
            mode,
            round,
            problem_id,
            text: text.to_owned(),
            classification,
        })
    }

    /// Builds the ledger entry for a planned query. The plan is checked
    /// again, since the phase or window may have moved while the provider
    /// was answering.
    pub fn answer_query(&self, plan: &QueryPlan, provider_text: Option<String>, now: u64) -> Result<JournalEvent, EngineError> {
        let fresh = self.validate_query(&plan.team_id, plan.kind.clone(), &plan.text, now)?;
        if fresh.classification.needs_provider() && provider_text.is_none() {
            return Err(EngineError::InvalidInput("provider answer required".into()));
        }
        let routing = Routing {
            glitch_probability: self.config.glitch_probability,
            strategy_flaw_probability: self.config.strategy_flaw_probability,
        };
        let mut rng = self.rng.clone();
        let mut recording = RecordingRng::new(&mut rng);
        let provider_text = provider_text.filter(|_| fresh.classification.needs_provider());
        let answer = ai_proxy::route(fresh.classification, &fresh.text, provider_text, routing, &mut recording);
        let draws = recording.into_draws();
        let at = self.stamp(now);
        let query_id = QueryId::from_index(self.queries.len());
        let recon_entry_id = match fresh.kind {
            QueryKind::Recon { .. } => Some(ReconEntryId::from_index(self.recon_entries.len())),
            QueryKind::Duel { .. } => None,
        };
        let record = QueryRecord {
            id: query_id.clone(),
            team_id: fresh.team_id.clone(),
            round: fresh.round,
            mode: fresh.mode,
            problem_id: fresh.problem_id.clone(),
            query_text: fresh.text.clone(),
            classification: fresh.classification,
            ground_truth: answer.ground_truth,
            emitted_answer: answer.emitted_answer,
            falsified: answer.falsified,
            flaw_kind: answer.flaw_kind,
            flaw_detail: answer.flaw_detail,
            rng_draw: answer.rng_draw,
            rng_draws: draws,
            recon_entry_id: recon_entry_id.clone(),
            timestamp: at,
        };
        Ok(match recon_entry_id {
            Some(entry_id) => JournalEvent::ReconQuery {
                entry: ReconEntry {
                    id: entry_id,
                    team_id: fresh.team_id,
                    prompt_text: fresh.text,
                    response_text: record.emitted_answer.clone(),
                    query_record_id: query_id,
                    timestamp: at,
                },
                record,
            },
            None => JournalEvent::QueryHandled { record },
        })
    }

    /// Files a deception claim and adjudicates it against the ledger at once.
    pub fn file_claim(
        &self,
        actor: &Actor,
        team_id: &TeamId,
        query_id: &QueryId,
        explanation: &str,
        now: u64,
    ) -> Result<JournalEvent, EngineError> {
        match actor {
            Actor::Team(own) if own == team_id => {}
            _ => return Err(EngineError::Unauthorized("only the team itself may file claims".into())),
        }
        self.team(team_id)?;
        if self.phase != Phase::Round2 {
            return Err(EngineError::wrong_phase(self.phase, "claims are filed in Round 2"));
        }
        let record = self.query(query_id)?;
        if &record.team_id != team_id {
            return Err(EngineError::ForeignQuery(query_id.to_string()));
        }
        if self.claims.iter().any(|c| &c.team_id == team_id && &c.query_id == query_id) {
            return Err(EngineError::AlreadyAdjudicated(query_id.to_string()));
        }
        let at = self.stamp(now);
        let claim_id = ClaimId::from_index(self.claims.len());
        let verdict = ai_proxy::adjudicate_claim(record);
        let events = scoring::score_deception_claim(verdict == ClaimVerdict::Upheld, self.config.rejected_claim_penalty)
            .map(|award| vec![self.score_event(0, team_id, award, claim_id.to_string(), at)])
            .unwrap_or_default();
        Ok(JournalEvent::ClaimAdjudicated {
            claim: DeceptionClaim {
                id: claim_id,
                team_id: team_id.clone(),
                query_id: query_id.clone(),
                explanation: explanation.to_owned(),
                verdict,
                timestamp: at,
            },
            events,
        })
    }

    pub fn open_window(&self, actor: &Actor, now: u64) -> Result<JournalEvent, EngineError> {
        require_admin(actor)?;
        if self.phase != Phase::Round3Recon {
            return Err(EngineError::wrong_phase(self.phase, "the window opens in Round3Recon"));
        }
        if self.window.is_some() {
            return Err(EngineError::AlreadyOpened);
        }
        Ok(JournalEvent::WindowOpened {
            opened_at: self.stamp(now),
            duration_secs: self.config.recon_duration_secs,
        })
    }

    /// Round-3 total for one team from its judged Round-3 solutions and the
    /// judge's interaction rubric.
    pub fn score_presentation(
        &self,
        actor: &Actor,
        team_id: &TeamId,
        interaction_score: f64,
        now: u64,
    ) -> Result<JournalEvent, EngineError> {
        judge_name(actor)?;
        if self.phase != Phase::Round3Presentation {
            return Err(EngineError::wrong_phase(self.phase, "presentations are scored in Round3Presentation"));
        }
        let team = self.team(team_id)?;
        if !team.active {
            return Err(EngineError::NotAdmitted(team_id.to_string()));
        }
        if self.presentations.iter().any(|p| &p.team_id == team_id) {
            return Err(EngineError::AlreadyPresented(team_id.to_string()));
        }
        let solution_raw: Points = self
            .submissions
            .iter()
            .filter(|s| &s.team_id == team_id && s.round == Round::R3)
            .filter_map(|s| scoring::score_solution(s.verdict).map(|(_, p)| p))
            .sum();
        let solution_max = scoring::CORRECT_SOLUTION * self.config.problems_in(Round::R3).count() as i64;
        let solution_score = scoring::normalize_round3_solution(solution_raw, solution_max);
        let weight = self.config.ai_interaction_weight;
        let total = scoring::round3_total(solution_score, interaction_score, weight)?;
        let at = self.stamp(now);
        let event = self.score_event(0, team_id, (ScoreRule::Round3Presentation, total), team_id.to_string(), at);
        Ok(JournalEvent::ScoreEventEmitted {
            event,
            presentation: Some(Presentation {
                team_id: team_id.clone(),
                solution_raw,
                solution_max,
                solution_score,
                interaction_score,
                weight,
                total,
            }),
        })
    }

    /// Time-driven events due at `now`: closing an expired window.
    pub fn tick(&self, now: u64) -> Option<JournalEvent> {
        let window = self.window.as_ref()?;
        if window.state == WindowState::Open && self.stamp(now) >= window.deadline() {
            return Some(JournalEvent::WindowClosed {
                closed_at: window.deadline(),
            });
        }
        None
    }

    fn team_mut(&mut self, id: &TeamId, sequence: u64) -> Result<&mut Team, EngineError> {
        self.teams
            .iter_mut()
            .find(|t| &t.id == id)
            .ok_or_else(|| corrupt(sequence, format!("unknown team {id}")))
    }

    fn push_feed(&mut self, payload: FeedPayload) {
        self.feed.push(FeedEvent {
            sequence: self.feed.len() as u64,
            clock_ms: self.clock,
            payload,
        });
    }

    fn push_score(&mut self, event: &ScoreEvent, sequence: u64) -> Result<(), EngineError> {
        if !event.rule.admits(event.delta) {
            return Err(corrupt(sequence, format!("{:?} cannot carry {}", event.rule, event.delta)));
        }
        if event.id != self.next_score_id(0) {
            return Err(corrupt(sequence, format!("score event id {} out of order", event.id)));
        }
        self.team(&event.team_id).map_err(|e| corrupt(sequence, e.to_string()))?;
        let total = self.totals.entry(event.team_id.clone()).or_insert(Points::ZERO);
        *total += event.delta;
        let total = *total;
        self.score_events.push(event.clone());
        self.push_feed(FeedPayload::ScoreChanged {
            team_id: event.team_id.clone(),
            rule: event.rule,
            delta: event.delta,
            total,
        });
        Ok(())
    }

    fn consume_draws(&mut self, draws: &[u64], sequence: u64) -> Result<(), EngineError> {
        use rand::RngCore;
        for (i, expected) in draws.iter().enumerate() {
            if self.rng.next_u64() != *expected {
                return Err(corrupt(sequence, format!("rng draw {i} does not match the seed")));
            }
        }
        Ok(())
    }

    fn push_query(&mut self, record: &QueryRecord, sequence: u64) -> Result<(), EngineError> {
        if record.id != QueryId::from_index(self.queries.len()) {
            return Err(corrupt(sequence, format!("query id {} out of order", record.id)));
        }
        if !record.is_sound() {
            return Err(corrupt(sequence, "ledger entry is inconsistent"));
        }
        self.consume_draws(&record.rng_draws, sequence)?;
        self.queries.push(record.clone());
        Ok(())
    }

    /// Applies one committed record. This is the only place state changes.
    pub fn apply(&mut self, record: &JournalRecord) -> Result<(), EngineError> {
        let seq = record.sequence;
        if seq != self.next_sequence {
            return Err(corrupt(seq, format!("expected sequence {}", self.next_sequence)));
        }
        if record.timestamp < self.clock {
            return Err(corrupt(seq, "timestamp moves backwards"));
        }
        self.clock = record.timestamp;
        match &record.event {
            JournalEvent::Created { .. } => return Err(corrupt(seq, "duplicate Created")),
            JournalEvent::TeamRegistered { team_id, name } => {
                if self.team_by_name(name).is_some() || self.team(team_id).is_ok() {
                    return Err(corrupt(seq, "duplicate team"));
                }
                self.teams.push(Team::new(team_id.clone(), name.clone()));
            }
            JournalEvent::PhaseChanged {
                from,
                to,
                deactivated,
                penalties,
            } => {
                if *from != self.phase || self.phase.successor() != Some(*to) {
                    return Err(corrupt(seq, format!("illegal transition {from} -> {to}")));
                }
                for id in deactivated {
                    self.team_mut(id, seq)?.active = false;
                }
                self.phase = *to;
                self.push_feed(FeedPayload::PhaseChanged { from: *from, to: *to });
                for event in penalties {
                    if event.rule != ScoreRule::QuotaPenalty {
                        return Err(corrupt(seq, "phase change may only carry quota penalties"));
                    }
                    self.push_score(event, seq)?;
                }
            }
            JournalEvent::SubmissionFiled { submission } => {
                if submission.id != SubmissionId::from_index(self.submissions.len()) {
                    return Err(corrupt(seq, "submission id out of order"));
                }
                self.team(&submission.team_id).map_err(|e| corrupt(seq, e.to_string()))?;
                self.submissions.push(submission.clone());
            }
            JournalEvent::Judged {
                submission_id,
                judge,
                verdict,
                hint_marks,
                events,
            } => {
                let submission = self
                    .submissions
                    .iter_mut()
                    .find(|s| &s.id == submission_id)
                    .ok_or_else(|| corrupt(seq, format!("unknown submission {submission_id}")))?;
                if submission.verdict != Verdict::Pending || *verdict == Verdict::Pending {
                    return Err(corrupt(seq, "submission judged twice"));
                }
                submission.verdict = *verdict;
                submission.hint_marks = hint_marks.clone();
                submission.judge = Some(judge.clone());
                submission.judged_at = Some(record.timestamp);
                for event in events {
                    self.push_score(event, seq)?;
                }
            }
            JournalEvent::PieceAwarded {
                team_id,
                problem_id,
                pieces,
            } => {
                let limit = self.config.puzzle_piece_count;
                let team = self.team_mut(team_id, seq)?;
                if *pieces != team.puzzle_pieces + 1 || *pieces > limit {
                    return Err(corrupt(seq, "piece count out of step"));
                }
                team.puzzle_pieces = *pieces;
                team.awarded_problems.push(problem_id.clone());
            }
            JournalEvent::EntryAttempt {
                team_id,
                result,
                attempts_used,
            } => {
                let max = self.config.max_entry_attempts;
                let team = self.team_mut(team_id, seq)?;
                if *attempts_used < team.entry_attempts_used || *attempts_used > max {
                    return Err(corrupt(seq, "entry attempts out of range"));
                }
                team.entry_attempts_used = *attempts_used;
                if *result == EntryResult::Admitted {
                    team.admitted = true;
                }
            }
            JournalEvent::QueryHandled { record: query } => {
                self.push_query(query, seq)?;
                if query.round == Round::R2 {
                    self.team_mut(&query.team_id, seq)?.round2_query_count += 1;
                }
            }
            JournalEvent::ReconQuery { entry, record: query } => {
                if entry.id != ReconEntryId::from_index(self.recon_entries.len())
                    || query.recon_entry_id.as_ref() != Some(&entry.id)
                    || entry.query_record_id != query.id
                {
                    return Err(corrupt(seq, "recon entry does not match its ledger record"));
                }
                self.push_query(query, seq)?;
                let team = self.team_mut(&entry.team_id, seq)?;
                team.recon_query_count += 1;
                let team_name = team.name.clone();
                self.recon_entries.push(entry.clone());
                self.push_feed(FeedPayload::PromptPosted {
                    entry_id: entry.id.clone(),
                    team_id: entry.team_id.clone(),
                    team_name,
                    prompt: entry.prompt_text.clone(),
                });
            }
            JournalEvent::ClaimAdjudicated { claim, events } => {
                if claim.id != ClaimId::from_index(self.claims.len()) {
                    return Err(corrupt(seq, "claim id out of order"));
                }
                self.claims.push(claim.clone());
                for event in events {
                    self.push_score(event, seq)?;
                }
            }
            JournalEvent::ScoreEventEmitted { event, presentation } => {
                if let Some(p) = presentation {
                    self.presentations.push(p.clone());
                }
                self.push_score(event, seq)?;
            }
            JournalEvent::WindowOpened {
                opened_at,
                duration_secs,
            } => {
                if self.window.is_some() {
                    return Err(corrupt(seq, "window opened twice"));
                }
                let window = ReconWindow {
                    opened_at: *opened_at,
                    duration_secs: *duration_secs,
                    state: WindowState::Open,
                    closed_at: None,
                };
                let closes_at = window.deadline();
                self.window = Some(window);
                self.push_feed(FeedPayload::WindowOpened {
                    opened_at: *opened_at,
                    closes_at,
                    duration_secs: *duration_secs,
                });
            }
            JournalEvent::WindowClosed { closed_at } => {
                let window = self
                    .window
                    .as_mut()
                    .filter(|w| w.state == WindowState::Open)
                    .ok_or_else(|| corrupt(seq, "no open window to close"))?;
                window.state = WindowState::Closed;
                window.closed_at = Some(*closed_at);
                self.push_feed(FeedPayload::WindowClosed { closed_at: *closed_at });
            }
        }
        self.next_sequence += 1;
        Ok(())
    }
}

/// A tournament bound to the journal its changes are written to.
///
/// Each change is appended to the journal first and applied to the state
/// only once the append succeeded.
pub struct Engine {
    state: Tournament,
    sink: Box<dyn JournalSink>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("state", &self.state).finish_non_exhaustive()
    }
}

impl Engine {
    pub fn create(
        id: TournamentId,
        config: TournamentConfig,
        now: u64,
        mut sink: Box<dyn JournalSink>,
    ) -> Result<Self, EngineError> {
        let record = JournalRecord {
            sequence: 0,
            timestamp: now,
            event: Tournament::created_event(id, config)?,
        };
        sink.append(&record)?;
        let state = Tournament::from_created(&record)?;
        Ok(Self { state, sink })
    }

    /// Rebuilds from `records`, which `sink` must already hold.
    pub fn restore(records: &[JournalRecord], sink: Box<dyn JournalSink>) -> Result<Self, EngineError> {
        if sink.len() != records.len() as u64 {
            return Err(EngineError::InvalidInput("journal sink does not match the records".into()));
        }
        let state = crate::journal::replay(records)?;
        Ok(Self { state, sink })
    }

    pub fn state(&self) -> &Tournament {
        &self.state
    }

    pub fn journal(&self) -> &dyn JournalSink {
        self.sink.as_ref()
    }

    pub fn commit(&mut self, now: u64, event: JournalEvent) -> Result<u64, EngineError> {
        let record = JournalRecord {
            sequence: self.state.next_sequence(),
            timestamp: self.state.stamp(now),
            event,
        };
        self.sink.append(&record)?;
        self.state.apply(&record)?;
        Ok(record.sequence)
    }

    /// Commits any time-driven events. Returns whether anything changed.
    pub fn tick(&mut self, now: u64) -> Result<bool, EngineError> {
        match self.state.tick(now) {
            Some(event) => {
                self.commit(now, event)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn register_team(&mut self, now: u64, actor: &Actor, name: &str) -> Result<TeamId, EngineError> {
        self.tick(now)?;
        let event = self.state.register_team(actor, name)?;
        let JournalEvent::TeamRegistered { team_id, .. } = &event else {
            unreachable!()
        };
        let team_id = team_id.clone();
        self.commit(now, event)?;
        Ok(team_id)
    }

    pub fn advance_phase(&mut self, now: u64, actor: &Actor) -> Result<Phase, EngineError> {
        self.tick(now)?;
        for event in self.state.advance_phase(actor, now)? {
            self.commit(now, event)?;
        }
        Ok(self.state.phase())
    }

    pub fn submit_solution(
        &mut self,
        now: u64,
        actor: &Actor,
        team_id: &TeamId,
        problem_id: &str,
        payload: &str,
        cited_hints: &[QueryId],
    ) -> Result<SubmissionId, EngineError> {
        self.tick(now)?;
        let event = self
            .state
            .submit_solution(actor, team_id, problem_id, payload, cited_hints, now)?;
        let JournalEvent::SubmissionFiled { submission } = &event else {
            unreachable!()
        };
        let id = submission.id.clone();
        self.commit(now, event)?;
        Ok(id)
    }

    pub fn judge_solution(
        &mut self,
        now: u64,
        actor: &Actor,
        submission_id: &SubmissionId,
        verdict: Verdict,
        hint_marks: &BTreeMap<QueryId, HintMark>,
    ) -> Result<Vec<ScoreEvent>, EngineError> {
        self.tick(now)?;
        let event = self
            .state
            .judge_solution(actor, submission_id, verdict, hint_marks, now)?;
        let events = event.score_events().to_vec();
        self.commit(now, event)?;
        Ok(events)
    }

    pub fn award_puzzle_piece(&mut self, now: u64, actor: &Actor, team_id: &TeamId, problem_id: &str) -> Result<u32, EngineError> {
        self.tick(now)?;
        let event = self.state.award_puzzle_piece(actor, team_id, problem_id)?;
        self.commit(now, event)?;
        Ok(self.state.team(team_id)?.puzzle_pieces)
    }

    pub fn attempt_round2_entry(&mut self, now: u64, actor: &Actor, team_id: &TeamId, guess: &str) -> Result<EntryResult, EngineError> {
        self.tick(now)?;
        let event = self.state.attempt_round2_entry(actor, team_id, guess)?;
        let JournalEvent::EntryAttempt { result, .. } = &event else {
            unreachable!()
        };
        let result = *result;
        self.commit(now, event)?;
        Ok(result)
    }

    pub fn plan_query(
        &mut self,
        now: u64,
        actor: &Actor,
        team_id: &TeamId,
        kind: QueryKind,
        text: &str,
    ) -> Result<QueryPlan, EngineError> {
        self.tick(now)?;
        self.state.plan_query(actor, team_id, kind, text, now)
    }

    pub fn answer_query(&mut self, now: u64, plan: &QueryPlan, provider_text: Option<String>) -> Result<QueryOutcome, EngineError> {
        self.tick(now)?;
        let event = self.state.answer_query(plan, provider_text, now)?;
        let (record, entry_id) = match &event {
            JournalEvent::QueryHandled { record } => (record, None),
            JournalEvent::ReconQuery { entry, record } => (record, Some(entry.id.clone())),
            _ => unreachable!(),
        };
        let outcome = QueryOutcome {
            query_id: record.id.clone(),
            answer: record.emitted_answer.clone(),
            recon_entry_id: entry_id,
        };
        self.commit(now, event)?;
        Ok(outcome)
    }

    /// Plans and answers a query in one step with a synchronous provider.
    pub fn query_with(
        &mut self,
        now: u64,
        actor: &Actor,
        team_id: &TeamId,
        kind: QueryKind,
        text: &str,
        provider: impl FnOnce(&str) -> Result<String, battle_llm::ProviderError>,
    ) -> Result<QueryOutcome, EngineError> {
        let plan = self.plan_query(now, actor, team_id, kind, text)?;
        let provider_text = if plan.classification.needs_provider() {
            Some(provider(&plan.text)?)
        } else {
            None
        };
        self.answer_query(now, &plan, provider_text)
    }

    pub fn file_claim(
        &mut self,
        now: u64,
        actor: &Actor,
        team_id: &TeamId,
        query_id: &QueryId,
        explanation: &str,
    ) -> Result<DeceptionClaim, EngineError> {
        self.tick(now)?;
        let event = self.state.file_claim(actor, team_id, query_id, explanation, now)?;
        let JournalEvent::ClaimAdjudicated { claim, .. } = &event else {
            unreachable!()
        };
        let claim = claim.clone();
        self.commit(now, event)?;
        Ok(claim)
    }

    pub fn open_window(&mut self, now: u64, actor: &Actor) -> Result<ReconWindow, EngineError> {
        self.tick(now)?;
        let event = self.state.open_window(actor, now)?;
        self.commit(now, event)?;
        Ok(self.state.window().cloned().expect("window just opened"))
    }

    pub fn score_presentation(
        &mut self,
        now: u64,
        actor: &Actor,
        team_id: &TeamId,
        interaction_score: f64,
    ) -> Result<Presentation, EngineError> {
        self.tick(now)?;
        let event = self.state.score_presentation(actor, team_id, interaction_score, now)?;
        self.commit(now, event)?;
        Ok(self.state.presentations().last().cloned().expect("presentation just recorded"))
    }
}
