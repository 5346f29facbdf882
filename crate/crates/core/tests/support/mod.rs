//! Random match histories driven through the engine.
#![allow(dead_code)]

use std::collections::BTreeMap;

use battle_core::ai_proxy::Mode;
use battle_core::journal::MemoryJournal;
use battle_core::model::{Actor, HintMark, Phase, QueryId, Round, SubmissionId, TeamId, TournamentId, Verdict};
use battle_core::{Engine, EngineError, Points, Problem, QueryKind, TournamentConfig};
use battle_llm::ProviderError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROMPTS: &[(Mode, &str)] = &[
    (Mode::Advisor, "state the quadratic formula"),
    (Mode::Advisor, "what is the mean value theorem"),
    (Mode::Advisor, "what strategy solves this inequality?"),
    (Mode::Advisor, "give me a plan for the geometry problem"),
    (Mode::Advisor, "tell me something nice"),
    (Mode::Calculator, "(3+4)*2"),
    (Mode::Calculator, "1/3 + 1/6"),
    (Mode::Calculator, "1/(2-2)"),
    (Mode::Calculator, "1+2+3+4+5+6"),
    (Mode::Calculator, "compute the integral of x^2 from 0 to 3"),
    (Mode::Calculator, "limit of sin(x)/x as x goes to 0"),
    (Mode::Calculator, "sum of the series 1/2^n"),
    (Mode::Calculator, "hello"),
];

/// Deterministic stand-in provider keyed on prompt text.
pub fn provider(prompt: &str) -> Result<String, ProviderError> {
    let lower = prompt.to_lowercase();
    let answer = if lower.contains("strategy") || lower.contains("plan") {
        "1. Check that the denominator is nonzero.\n2. Multiply both sides by the square.\n3. Collect terms and factor.\n4. Test each interval."
            .to_owned()
    } else if lower.contains("integral") {
        "Integrating x^2 gives x^3/3, so the value is 9".to_owned()
    } else if lower.contains("limit") {
        "The limit equals 1".to_owned()
    } else if lower.contains("series") {
        "It is a geometric series with sum 1.".to_owned()
    } else if lower.contains("1+2+3") {
        "Adding step by step gives 21".to_owned()
    } else {
        format!("Answer to: {prompt}")
    };
    Ok(answer)
}

pub struct History {
    pub engine: Engine,
    pub clock: u64,
    pub errors: BTreeMap<&'static str, usize>,
    pub ops: usize,
}

pub fn random_config(rng: &mut ChaCha8Rng) -> TournamentConfig {
    let pieces = rng.random_range(1..=3u32);
    let mut problems: Vec<Problem> = (0..pieces + rng.random_range(0..2))
        .map(|i| Problem::new(format!("r1-{i}"), Round::R1))
        .collect();
    problems.extend((0..rng.random_range(1..=3)).map(|i| Problem::new(format!("r2-{i}"), Round::R2)));
    problems.extend((0..rng.random_range(1..=2)).map(|i| Problem::new(format!("r3-{i}"), Round::R3)));
    if rng.random_bool(0.5) {
        problems.last_mut().unwrap().recon_mode = Some(Mode::Calculator);
    }
    TournamentConfig {
        quota_min_queries: rng.random_range(1..=20),
        quota_penalty_per_missing: Points::from_tenths(rng.random_range(0..=10)),
        recon_duration_secs: rng.random_range(60..=900),
        ai_interaction_weight: rng.random_range(0.0..=1.0),
        puzzle_piece_count: pieces,
        max_entry_attempts: rng.random_range(1..=3),
        glitch_probability: rng.random_range(0.0..=1.0),
        strategy_flaw_probability: [0.0, 0.5, 1.0][rng.random_range(0..3)],
        rng_seed: rng.random(),
        passcode: "open sesame".into(),
        problems,
        round1_scores_count: rng.random_bool(0.5),
        rejected_claim_penalty: Points::from_tenths([0, 0, 5, 10][rng.random_range(0..4)]),
        recon_query_cap: if rng.random_bool(0.3) { Some(rng.random_range(1..=4)) } else { None },
        ai_access_in_round3_solve: rng.random_bool(0.3),
        ..TournamentConfig::default()
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.random_range(0..items.len())])
    }
}

impl History {
    fn note(&mut self, result: Result<(), EngineError>) {
        self.ops += 1;
        if let Err(e) = result {
            *self.errors.entry(e.code()).or_default() += 1;
        }
    }

    /// Walks most teams through the Round-1 gate with correct answers.
    fn admit_some(&mut self, rng: &mut ChaCha8Rng) {
        let state = self.engine.state();
        let teams: Vec<TeamId> = state.teams().iter().map(|t| t.id.clone()).collect();
        let problems: Vec<String> = state.config().problems_in(Round::R1).map(|p| p.id.clone()).collect();
        let judge = Actor::Judge("j".into());
        for team in teams {
            if rng.random_bool(0.25) {
                continue;
            }
            let actor = Actor::Team(team.clone());
            for problem in &problems {
                self.clock += rng.random_range(0..5_000);
                let now = self.clock;
                let result = self
                    .engine
                    .submit_solution(now, &actor, &team, problem, "proof", &[])
                    .and_then(|id| self.engine.judge_solution(now, &judge, &id, Verdict::Correct, &BTreeMap::new()))
                    .and_then(|_| self.engine.award_puzzle_piece(now, &judge, &team, problem))
                    .map(|_| ());
                self.note(result);
            }
            let guess = if rng.random_bool(0.2) { "wrong" } else { "open sesame" };
            let result = self.engine.attempt_round2_entry(self.clock, &actor, &team, guess).map(|_| ());
            self.note(result);
        }
    }

    fn random_actor(&self, rng: &mut ChaCha8Rng, team: &TeamId) -> Actor {
        match rng.random_range(0..10) {
            0 => Actor::Spectator,
            1 => Actor::Judge("j".into()),
            2 => Actor::Admin,
            _ => Actor::Team(team.clone()),
        }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng) {
        self.clock += rng.random_range(0..30_000);
        let state = self.engine.state();
        let teams: Vec<TeamId> = state.teams().iter().map(|t| t.id.clone()).collect();
        let Some(team) = pick(rng, &teams).cloned() else {
            return;
        };
        let actor = self.random_actor(rng, &team);
        let problems: Vec<String> = state.config().problems.iter().map(|p| p.id.clone()).collect();
        let queries: Vec<QueryId> = state.queries().iter().map(|q| q.id.clone()).collect();
        let own_queries: Vec<QueryId> = state
            .queries()
            .iter()
            .filter(|q| q.team_id == team)
            .map(|q| q.id.clone())
            .collect();
        let submissions: Vec<SubmissionId> = state.submissions().iter().map(|s| s.id.clone()).collect();
        let pending: Vec<SubmissionId> = state
            .submissions()
            .iter()
            .filter(|s| s.verdict == Verdict::Pending)
            .map(|s| s.id.clone())
            .collect();
        let now = self.clock;
        let result = match rng.random_range(0..15) {
            0 | 1 | 10 => {
                let problem = pick(rng, &problems).cloned().unwrap_or_default();
                let mut hints: Vec<QueryId> = own_queries.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
                if rng.random_bool(0.1) {
                    if let Some(q) = pick(rng, &queries) {
                        hints.push(q.clone());
                    }
                }
                self.engine
                    .submit_solution(now, &actor, &team, &problem, "proof", &hints)
                    .map(|_| ())
            }
            2 | 3 => {
                let pool = if rng.random_bool(0.8) && !pending.is_empty() { &pending } else { &submissions };
                let Some(id) = pick(rng, pool).cloned() else {
                    return;
                };
                let cited = self.engine.state().submission(&id).unwrap().cited_hints.clone();
                let verdict = [Verdict::Correct, Verdict::Partial, Verdict::Incorrect, Verdict::Pending]
                    [rng.random_range(0..4)];
                let mut marks: BTreeMap<QueryId, HintMark> = cited
                    .into_iter()
                    .map(|q| {
                        let falsified = self.engine.state().query(&q).map(|r| r.falsified).unwrap_or(false);
                        let mark = if falsified && rng.random_bool(0.7) {
                            HintMark::Misled
                        } else {
                            [HintMark::UsedCorrectly, HintMark::Misled, HintMark::Neutral][rng.random_range(0..3)]
                        };
                        (q, mark)
                    })
                    .collect();
                if rng.random_bool(0.05) {
                    marks.pop_first();
                }
                let judge = if rng.random_bool(0.9) { Actor::Judge("j".into()) } else { actor };
                self.engine.judge_solution(now, &judge, &id, verdict, &marks).map(|_| ())
            }
            4 => {
                let problem = pick(rng, &problems).cloned().unwrap_or_default();
                let judge = if rng.random_bool(0.9) { Actor::Judge("j".into()) } else { actor };
                self.engine.award_puzzle_piece(now, &judge, &team, &problem).map(|_| ())
            }
            5 => {
                let guess = if rng.random_bool(0.7) { "open sesame" } else { "wrong" };
                self.engine.attempt_round2_entry(now, &actor, &team, guess).map(|_| ())
            }
            6 | 7 | 11 | 12 | 13 => {
                let (mode, text) = *pick(rng, PROMPTS).unwrap();
                let kind = if self.engine.state().phase() == Phase::Round3Recon {
                    QueryKind::Recon {
                        problem_id: pick(rng, &problems).cloned().filter(|_| rng.random_bool(0.5)),
                    }
                } else {
                    QueryKind::Duel { mode }
                };
                self.engine.query_with(now, &actor, &team, kind, text, provider).map(|_| ())
            }
            8 => {
                let target = if rng.random_bool(0.8) { pick(rng, &own_queries) } else { pick(rng, &queries) };
                let Some(q) = target.cloned() else {
                    return;
                };
                self.engine.file_claim(now, &actor, &team, &q, "looks wrong").map(|_| ())
            }
            9 => self.engine.open_window(now, &Actor::Admin).map(|_| ()),
            _ => {
                let score = rng.random_range(-5.0..=105.0);
                self.engine
                    .score_presentation(now, &Actor::Judge("j".into()), &team, score)
                    .map(|_| ())
            }
        };
        self.note(result);
    }
}

/// A complete tournament from registration to Finished with `steps` random
/// operations per phase, many of them invalid on purpose.
pub fn random_history(seed: u64, steps: usize) -> History {
    random_history_with(seed, steps, |_| {})
}

/// Like [`random_history`], with `adjust` applied to the drawn config.
pub fn random_history_with(seed: u64, steps: usize, adjust: impl FnOnce(&mut TournamentConfig)) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = random_config(&mut rng);
    adjust(&mut config);
    let engine = Engine::create(
        TournamentId::from_index(seed as usize),
        config,
        0,
        Box::new(MemoryJournal::new()),
    )
    .expect("valid random config");
    let mut history = History {
        engine,
        clock: 0,
        errors: BTreeMap::new(),
        ops: 0,
    };
    for i in 0..rng.random_range(2..=4) {
        let name = format!("team {i}");
        let result = history.engine.register_team(0, &Actor::Admin, &name).map(|_| ());
        history.note(result);
    }
    while history.engine.state().phase() != Phase::Finished {
        if history.engine.state().phase() == Phase::Round3Recon {
            let result = history.engine.open_window(history.clock, &Actor::Admin).map(|_| ());
            history.note(result);
        }
        if history.engine.state().phase() == Phase::Round1 {
            history.admit_some(&mut rng);
        }
        for _ in 0..rng.random_range(0..=steps) {
            history.step(&mut rng);
        }
        let result = history.engine.advance_phase(history.clock, &Actor::Admin).map(|_| ());
        history.note(result);
    }
    let result = history.engine.advance_phase(history.clock, &Actor::Admin).map(|_| ());
    history.note(result);
    history
}

pub fn journal_records(engine: &Engine) -> Vec<battle_core::journal::JournalRecord> {
    battle_core::journal::read_journal(&engine.journal().to_bytes()[..])
        .expect("journal parses")
        .records
}
