use std::collections::BTreeMap;
use std::sync::Arc;

use battle_core::ai_proxy::{ClaimVerdict, FlawKind, Mode};
use battle_core::clock::{ClockSource, ManualClock};
use battle_core::journal::{self, JournalEvent, JournalSink, MemoryJournal, SyncPolicy};
use battle_core::model::{Actor, EntryResult, HintMark, Phase, QueryId, TeamId, TournamentId, Verdict};
use battle_core::recon::FeedPayload;
use battle_core::scoring::ScoreRule;
use battle_core::{Engine, EngineError, Points, QueryKind, Registry, Storage, TournamentConfig};
use battle_llm::{Cassette, MockProvider, ProviderError};

const ADMIN: Actor = Actor::Admin;

fn judge() -> Actor {
    Actor::Judge("judge-1".into())
}

fn engine(config: TournamentConfig) -> Engine {
    Engine::create(TournamentId::from_index(0), config, 0, Box::new(MemoryJournal::new())).unwrap()
}

fn small_config() -> TournamentConfig {
    TournamentConfig {
        puzzle_piece_count: 6,
        ..TournamentConfig::default()
    }
}

fn team(e: &mut Engine, name: &str) -> (TeamId, Actor) {
    let id = e.register_team(0, &ADMIN, name).unwrap();
    (id.clone(), Actor::Team(id))
}

fn fake(answer: &'static str) -> impl FnOnce(&str) -> Result<String, ProviderError> {
    move |_| Ok(answer.to_owned())
}

/// Team passes Round 1 with every piece and the right passcode.
fn admit(e: &mut Engine, id: &TeamId, actor: &Actor) {
    let problems: Vec<String> = e
        .state()
        .config()
        .problems_in(battle_core::model::Round::R1)
        .map(|p| p.id.clone())
        .collect();
    for p in &problems {
        let sub = e.submit_solution(0, actor, id, p, "answer", &[]).unwrap();
        e.judge_solution(0, &judge(), &sub, Verdict::Correct, &BTreeMap::new()).unwrap();
        e.award_puzzle_piece(0, &judge(), id, p).unwrap();
    }
    assert_eq!(e.attempt_round2_entry(0, actor, id, "passcode").unwrap(), EntryResult::Admitted);
}

#[test]
fn creation_and_registration() {
    let config = TournamentConfig::default();
    assert_eq!(config.quota_min_queries, 15);
    let mut e = engine(config);
    assert_eq!(e.state().phase(), Phase::Registration);
    team(&mut e, "Alpha");
    team(&mut e, "Beta");
    assert_eq!(e.state().teams().len(), 2);
    assert!(matches!(
        e.register_team(0, &ADMIN, "Alpha"),
        Err(EngineError::DuplicateName(_))
    ));
    assert!(matches!(
        e.register_team(0, &Actor::Spectator, "Gamma"),
        Err(EngineError::Unauthorized(_))
    ));
    let bad = TournamentConfig {
        ai_interaction_weight: 1.5,
        ..Default::default()
    };
    assert!(matches!(
        Engine::create(TournamentId::from_index(1), bad, 0, Box::new(MemoryJournal::new())),
        Err(EngineError::InvalidConfig { .. })
    ));
    e.advance_phase(0, &ADMIN).unwrap();
    e.advance_phase(0, &ADMIN).unwrap();
    assert!(matches!(
        e.register_team(0, &ADMIN, "Late"),
        Err(EngineError::WrongPhase { .. })
    ));
}

#[test]
fn registry_ids_are_distinct() {
    let provider = Arc::new(MockProvider::new(Cassette::new()));
    let registry = Registry::open(Storage::Memory, ClockSource::Manual(ManualClock::new(0)), provider).unwrap();
    let a = registry.create(TournamentConfig::default()).unwrap();
    let b = registry.create(TournamentConfig::default()).unwrap();
    assert_ne!(a.id(), b.id());
    assert!(registry.get(a.id()).is_ok());
}

#[test]
fn round_one_gate() {
    let mut e = engine(small_config());
    let (a, ta) = team(&mut e, "Alpha");
    let (b, tb) = team(&mut e, "Beta");
    e.advance_phase(0, &ADMIN).unwrap();

    let first = e.submit_solution(0, &ta, &a, "r1-1", "x", &[]).unwrap();
    e.judge_solution(0, &judge(), &first, Verdict::Partial, &BTreeMap::new()).unwrap();
    assert!(matches!(
        e.award_puzzle_piece(0, &judge(), &a, "r1-1"),
        Err(EngineError::NotCorrect(_))
    ));
    // A Partial verdict keeps the problem open; resubmission needs Incorrect.
    assert!(matches!(
        e.submit_solution(0, &ta, &a, "r1-1", "y", &[]),
        Err(EngineError::DuplicateSubmission(_))
    ));
    for p in ["r1-2", "r1-3", "r1-4"] {
        let s = e.submit_solution(0, &ta, &a, p, "x", &[]).unwrap();
        e.judge_solution(0, &judge(), &s, Verdict::Correct, &BTreeMap::new()).unwrap();
    }
    assert_eq!(e.award_puzzle_piece(0, &judge(), &a, "r1-2").unwrap(), 1);
    assert_eq!(e.award_puzzle_piece(0, &judge(), &a, "r1-3").unwrap(), 2);
    assert_eq!(e.award_puzzle_piece(0, &judge(), &a, "r1-4").unwrap(), 3);
    assert!(matches!(
        e.award_puzzle_piece(0, &judge(), &a, "r1-4"),
        Err(EngineError::AlreadyAwarded(_))
    ));
    assert!(matches!(
        e.award_puzzle_piece(0, &ta, &a, "r1-2"),
        Err(EngineError::Unauthorized(_))
    ));
    assert_eq!(e.attempt_round2_entry(0, &ta, &a, "passcode").unwrap(), EntryResult::Rejected);
    assert_eq!(e.state().team(&a).unwrap().entry_attempts_used, 1);

    assert_eq!(e.attempt_round2_entry(0, &tb, &b, "nope").unwrap(), EntryResult::Rejected);
    assert_eq!(e.attempt_round2_entry(0, &tb, &b, "nope").unwrap(), EntryResult::Rejected);
    assert_eq!(e.attempt_round2_entry(0, &tb, &b, "nope").unwrap(), EntryResult::LockedOut);
    assert_eq!(e.attempt_round2_entry(0, &tb, &b, "passcode").unwrap(), EntryResult::LockedOut);
    assert_eq!(e.state().team(&b).unwrap().entry_attempts_used, 3);
    assert!(matches!(
        e.attempt_round2_entry(0, &ta, &b, "x"),
        Err(EngineError::Unauthorized(_))
    ));

    // Round-1 verdicts do not score by default.
    assert!(e.state().score_events().is_empty());
    e.advance_phase(0, &ADMIN).unwrap();
    assert!(!e.state().team(&a).unwrap().active);
    assert!(!e.state().team(&b).unwrap().active);
    assert!(matches!(
        e.query_with(0, &ta, &a, QueryKind::Duel { mode: Mode::Advisor }, "state x", fake("y")),
        Err(EngineError::NotAdmitted(_))
    ));
    assert!(matches!(
        e.attempt_round2_entry(0, &ta, &a, "passcode"),
        Err(EngineError::WrongPhase { .. })
    ));
}

#[test]
fn round_two_scoring_schedule() {
    let mut e = engine(TournamentConfig {
        glitch_probability: 1.0,
        ..small_config()
    });
    let (a, ta) = team(&mut e, "Alpha");
    let (b, tb) = team(&mut e, "Beta");
    e.advance_phase(0, &ADMIN).unwrap();
    admit(&mut e, &a, &ta);
    admit(&mut e, &b, &tb);
    assert!(matches!(
        e.submit_solution(0, &ta, &a, "r2-1", "x", &[]),
        Err(EngineError::WrongPhase { .. })
    ));
    e.advance_phase(0, &ADMIN).unwrap();

    let arith = e
        .query_with(0, &ta, &a, QueryKind::Duel { mode: Mode::Calculator }, "(3+4)*2", |_| {
            panic!("provider must not be consulted")
        })
        .unwrap();
    assert_eq!(arith.answer, "14");
    let fact = e
        .query_with(
            0,
            &ta,
            &a,
            QueryKind::Duel { mode: Mode::Advisor },
            "state the quadratic formula",
            fake("x = (-b ± sqrt(b^2-4ac)) / 2a"),
        )
        .unwrap();
    assert_eq!(fact.answer, "x = (-b ± sqrt(b^2-4ac)) / 2a");
    let calc = e
        .query_with(
            0,
            &ta,
            &a,
            QueryKind::Duel { mode: Mode::Calculator },
            "compute the integral of x^2 from 0 to 3",
            fake("9"),
        )
        .unwrap();
    assert_ne!(calc.answer, "9");
    let record = e.state().query(&calc.query_id).unwrap();
    assert!(record.falsified);
    assert!(matches!(
        record.flaw_kind,
        FlawKind::SignFlip | FlawKind::FactorError | FlawKind::DigitPerturbation
    ));
    let plan = e
        .query_with(
            0,
            &ta,
            &a,
            QueryKind::Duel { mode: Mode::Advisor },
            "what strategy solves this inequality?",
            fake("Move everything to one side. Factor the polynomial. Check the sign on each interval."),
        )
        .unwrap();
    assert!(e.state().query(&plan.query_id).unwrap().falsified);
    let b_query = e
        .query_with(0, &tb, &b, QueryKind::Duel { mode: Mode::Calculator }, "1+1", fake(""))
        .unwrap();

    // Claims.
    let upheld = e.file_claim(0, &ta, &a, &plan.query_id, "plan skips a step").unwrap();
    assert_eq!(upheld.verdict, ClaimVerdict::Upheld);
    assert!(matches!(
        e.file_claim(0, &ta, &a, &plan.query_id, "again"),
        Err(EngineError::AlreadyAdjudicated(_))
    ));
    let rejected = e.file_claim(0, &ta, &a, &fact.query_id, "suspicious").unwrap();
    assert_eq!(rejected.verdict, ClaimVerdict::Rejected);
    assert!(matches!(
        e.file_claim(0, &ta, &a, &b_query.query_id, "theirs"),
        Err(EngineError::ForeignQuery(_))
    ));

    // Submissions and judging.
    assert!(matches!(
        e.submit_solution(0, &ta, &a, "r2-1", "x", &[b_query.query_id.clone()]),
        Err(EngineError::UnknownHintId(_))
    ));
    let cited = vec![calc.query_id.clone(), fact.query_id.clone(), arith.query_id.clone()];
    let sub = e.submit_solution(0, &ta, &a, "r2-1", "x", &cited).unwrap();
    assert!(matches!(
        e.judge_solution(0, &ta, &sub, Verdict::Correct, &BTreeMap::new()),
        Err(EngineError::Unauthorized(_))
    ));
    assert!(matches!(
        e.judge_solution(0, &judge(), &sub, Verdict::Correct, &BTreeMap::new()),
        Err(EngineError::HintMarksMismatch)
    ));
    let marks: BTreeMap<QueryId, HintMark> = [
        (calc.query_id.clone(), HintMark::Misled),
        (fact.query_id.clone(), HintMark::UsedCorrectly),
        (arith.query_id.clone(), HintMark::Neutral),
    ]
    .into_iter()
    .collect();
    let events = e.judge_solution(0, &judge(), &sub, Verdict::Incorrect, &marks).unwrap();
    let pairs: Vec<(ScoreRule, Points)> = events.iter().map(|e| (e.rule, e.delta)).collect();
    assert_eq!(
        pairs,
        vec![
            (ScoreRule::FalseHintUsed, Points::whole(-1)),
            (ScoreRule::CorrectHintUse, Points::from_tenths(5)),
        ]
    );
    assert!(matches!(
        e.judge_solution(0, &judge(), &sub, Verdict::Correct, &marks),
        Err(EngineError::AlreadyJudged(_))
    ));
    let again = e.submit_solution(0, &ta, &a, "r2-1", "y", &[]).unwrap();
    let events = e.judge_solution(0, &judge(), &again, Verdict::Correct, &BTreeMap::new()).unwrap();
    assert_eq!(events[0].delta, Points::whole(5));
    let partial = e.submit_solution(0, &tb, &b, "r2-2", "z", &[]).unwrap();
    let events = e.judge_solution(0, &judge(), &partial, Verdict::Partial, &BTreeMap::new()).unwrap();
    assert_eq!(events[0].delta, Points::whole(2));

    // Leaving Round 2: both teams are below quota.
    e.advance_phase(0, &ADMIN).unwrap();
    let board = e.state().scoreboard();
    // a: +2 claim, -1 misled, +0.5 hint, +5 correct, -(15-4)*0.5 quota
    assert_eq!(board.total(&a), Some(Points::from_tenths(20 - 10 + 5 + 50 - 55)));
    // b: +2 partial, -(15-1)*0.5
    assert_eq!(board.total(&b), Some(Points::from_tenths(20 - 70)));
}

#[test]
fn quota_boundaries() {
    let mut e = engine(small_config());
    let (a, ta) = team(&mut e, "Exact");
    let (b, tb) = team(&mut e, "Short");
    e.advance_phase(0, &ADMIN).unwrap();
    admit(&mut e, &a, &ta);
    admit(&mut e, &b, &tb);
    e.advance_phase(0, &ADMIN).unwrap();
    for i in 0..15 {
        e.query_with(0, &ta, &a, QueryKind::Duel { mode: Mode::Calculator }, &format!("{i}+1"), fake(""))
            .unwrap();
    }
    for i in 0..10 {
        e.query_with(0, &tb, &b, QueryKind::Duel { mode: Mode::Calculator }, &format!("{i}+1"), fake(""))
            .unwrap();
    }
    e.advance_phase(0, &ADMIN).unwrap();
    let penalties: Vec<_> = e
        .state()
        .score_events()
        .iter()
        .filter(|ev| ev.rule == ScoreRule::QuotaPenalty)
        .collect();
    assert_eq!(penalties.len(), 1);
    assert_eq!(penalties[0].team_id, b);
    assert_eq!(penalties[0].delta, Points::from_tenths(-25));
}

fn recon_ready(config: TournamentConfig) -> (Engine, Vec<(TeamId, Actor)>) {
    let mut e = engine(config);
    let teams: Vec<_> = ["A", "B", "C"].iter().map(|n| team(&mut e, n)).collect();
    e.advance_phase(0, &ADMIN).unwrap();
    for (id, actor) in &teams[..2] {
        admit(&mut e, id, actor);
    }
    e.advance_phase(0, &ADMIN).unwrap();
    e.advance_phase(0, &ADMIN).unwrap();
    (e, teams)
}

#[test]
fn recon_window_rules() {
    let (mut e, teams) = recon_ready(small_config());
    let (a, ta) = &teams[0];
    let (c, tc) = &teams[2];
    let recon = || QueryKind::Recon { problem_id: None };
    assert!(matches!(
        e.query_with(1_000, ta, a, recon(), "state the rules", fake("r")),
        Err(EngineError::WindowClosed)
    ));
    let window = e.open_window(1_000, &ADMIN).unwrap();
    assert_eq!(window.opened_at, 1_000);
    assert!(matches!(e.open_window(1_000, &ADMIN), Err(EngineError::AlreadyOpened)));
    assert!(matches!(
        e.query_with(1_000, tc, c, recon(), "state x", fake("r")),
        Err(EngineError::NotAdmitted(_))
    ));
    e.query_with(1_000, ta, a, recon(), "state the rules", fake("secret-0")).unwrap();
    e.query_with(1_000 + 899_000, ta, a, recon(), "define a group", fake("secret-1"))
        .unwrap();
    assert!(matches!(
        e.query_with(1_000 + 901_000, ta, a, recon(), "define a ring", fake("secret-2")),
        Err(EngineError::WindowClosed)
    ));
    let feed = e.state().feed();
    let prompts: Vec<&str> = feed
        .iter()
        .filter_map(|ev| match &ev.payload {
            FeedPayload::PromptPosted { prompt, .. } => Some(prompt.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(prompts, ["state the rules", "define a group"]);
    assert!(matches!(feed.last().unwrap().payload, FeedPayload::WindowClosed { closed_at: 901_000 }));
    let text = serde_json::to_string(feed).unwrap();
    assert!(!text.contains("secret"));
    assert_eq!(e.state().private_responses(a).len(), 2);
    assert_eq!(e.state().private_responses(a)[1].answer, "secret-1");
}

#[test]
fn open_window_wrong_phase() {
    let mut e = engine(small_config());
    assert!(matches!(e.open_window(0, &ADMIN), Err(EngineError::WrongPhase { .. })));
}

#[test]
fn presentation_weighting() {
    let (mut e, teams) = recon_ready(small_config());
    let (a, ta) = &teams[0];
    let (b, tb) = &teams[1];
    e.advance_phase(0, &ADMIN).unwrap();
    for p in ["r3-1", "r3-2"] {
        let s = e.submit_solution(0, ta, a, p, "x", &[]).unwrap();
        e.judge_solution(0, &judge(), &s, Verdict::Correct, &BTreeMap::new()).unwrap();
    }
    let s = e.submit_solution(0, tb, b, "r3-1", "x", &[]).unwrap();
    e.judge_solution(0, &judge(), &s, Verdict::Partial, &BTreeMap::new()).unwrap();
    e.advance_phase(0, &ADMIN).unwrap();
    let pa = e.score_presentation(0, &judge(), a, 0.0).unwrap();
    assert_eq!(pa.solution_score, 100.0);
    assert_eq!(pa.total, Points::whole(70));
    let pb = e.score_presentation(0, &judge(), b, 80.0).unwrap();
    // raw 2 of 10 -> 20; 0.7 * 20 + 0.3 * 80 = 38
    assert_eq!(pb.total, Points::whole(38));
    assert!(matches!(
        e.score_presentation(0, &judge(), a, 10.0),
        Err(EngineError::AlreadyPresented(_))
    ));
    assert!(matches!(
        e.score_presentation(0, &judge(), &teams[2].0, 10.0),
        Err(EngineError::NotAdmitted(_))
    ));
    e.advance_phase(0, &ADMIN).unwrap();
    assert!(matches!(e.advance_phase(0, &ADMIN), Err(EngineError::AlreadyFinished)));
    assert!(matches!(e.advance_phase(0, &tb.clone()), Err(EngineError::Unauthorized(_))));
}

#[test]
fn replay_from_file_matches_live_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = journal::journal_path(dir.path(), &TournamentId::from_index(0));
    let sink = journal::FileJournal::create(&path, SyncPolicy::Flush).unwrap();
    let mut e = Engine::create(TournamentId::from_index(0), small_config(), 0, Box::new(sink)).unwrap();
    let (a, ta) = team(&mut e, "A");
    e.advance_phase(0, &ADMIN).unwrap();
    admit(&mut e, &a, &ta);
    e.advance_phase(5, &ADMIN).unwrap();
    for text in ["what strategy works?", "1+2+3+4+5+6"] {
        let mode = if text.starts_with("what") { Mode::Advisor } else { Mode::Calculator };
        e.query_with(10, &ta, &a, QueryKind::Duel { mode }, text, fake("First do this. Then 21"))
            .unwrap();
    }
    let replayed = journal::replay_file(&path).unwrap();
    assert_eq!(&replayed, e.state());
    assert_eq!(std::fs::read(&path).unwrap(), e.journal().to_bytes());

    // Truncation keeps the intact prefix.
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    let partial = journal::replay_file(&path).unwrap();
    assert_eq!(partial.next_sequence(), e.state().next_sequence() - 1);

    // A record with a tampered rng draw is rejected.
    let mut records = journal::read_journal(&bytes[..]).unwrap().records;
    let last = records.last_mut().unwrap();
    if let JournalEvent::QueryHandled { record } = &mut last.event {
        record.rng_draws[0] ^= 1;
    }
    assert!(matches!(
        journal::replay(&records),
        Err(EngineError::CorruptRecord { .. })
    ));
}

#[test]
fn registry_restores_from_directory() {
    let dir = tempfile::tempdir().unwrap();
    let storage = Storage::Directory {
        dir: dir.path().to_path_buf(),
        sync: SyncPolicy::Flush,
    };
    let provider = Arc::new(MockProvider::new(Cassette::new()));
    let clock = ManualClock::new(0);
    let id = {
        let registry = Registry::open(storage.clone(), ClockSource::Manual(clock.clone()), provider.clone()).unwrap();
        let handle = registry.create(small_config()).unwrap();
        handle
            .execute(|e, now| e.register_team(now, &ADMIN, "A"))
            .unwrap();
        handle.id().clone()
    };
    let registry = Registry::open(storage, ClockSource::Manual(clock), provider).unwrap();
    let handle = registry.get(&id).unwrap();
    assert_eq!(handle.read(|t| t.teams().len()), 1);
    let next = registry.create(small_config()).unwrap();
    assert_ne!(next.id(), &id);
}

#[tokio::test]
async fn handle_queries_through_the_provider() {
    let cassette: Cassette = [("state the quadratic formula", "x = ...")].into_iter().collect();
    let provider = Arc::new(MockProvider::new(cassette));
    let clock = ManualClock::new(0);
    let registry = Registry::open(Storage::Memory, ClockSource::Manual(clock.clone()), provider).unwrap();
    let handle = registry.create(small_config()).unwrap();
    let a = handle.execute(|e, now| e.register_team(now, &ADMIN, "A")).unwrap();
    let ta = Actor::Team(a.clone());
    handle.execute(|e, now| e.advance_phase(now, &ADMIN)).unwrap();
    handle
        .execute(|e, _| {
            admit(e, &a, &ta);
            Ok(())
        })
        .unwrap();
    handle.execute(|e, now| e.advance_phase(now, &ADMIN)).unwrap();
    let mut changes = handle.subscribe();
    let out = handle
        .query(&ta, &a, QueryKind::Duel { mode: Mode::Advisor }, "state  the quadratic formula ")
        .await
        .unwrap();
    assert_eq!(out.answer, "x = ...");
    assert!(changes.has_changed().unwrap());
    changes.borrow_and_update();
    let miss = handle
        .query(&ta, &a, QueryKind::Duel { mode: Mode::Advisor }, "state something else")
        .await;
    assert!(matches!(
        miss,
        Err(EngineError::ProviderUnavailable(ProviderError::CassetteMiss { .. }))
    ));
    assert!(!changes.has_changed().unwrap());
    assert_eq!(handle.read(|t| t.queries().len()), 1);
}

#[test]
fn memory_journal_is_sink() {
    let j = MemoryJournal::new();
    assert!(j.is_empty());
}
