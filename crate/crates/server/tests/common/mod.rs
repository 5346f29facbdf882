#![allow(dead_code)]

use std::sync::Arc;

use battle_core::clock::{ClockSource, ManualClock};
use battle_core::model::{Round, TeamId, TournamentId};
use battle_core::{Registry, Storage, TournamentConfig};
use battle_llm::{Cassette, MockProvider};
use battle_server::{spawn_local, AppState, Client, TokenStore};

pub const MASTER: &str = "root-token";

pub const CASSETTE: &[(&str, &str)] = &[
    ("state the quadratic formula", "x = (-b ± sqrt(b^2-4ac)) / 2a"),
    ("what strategy solves x^2 > 4?", "Move 4 to the left side. Factor the difference of squares. Check each interval."),
    ("compute the integral of x^2 from 0 to 3", "The antiderivative is x^3/3 so the value is 9"),
    ("define a group", "A set with an associative operation, identity and inverses. marker-A"),
    ("define a ring", "marker-B: an abelian group with a distributive multiplication"),
    ("define a field", "marker-C: a commutative ring where nonzero elements are invertible"),
    ("state fact alpha", "marker-E: alpha holds"),
    ("state fact beta", "marker-F: beta holds"),
    ("define a module", "marker-D: like a vector space over a ring"),
];

pub struct Server {
    pub admin: Client,
    pub clock: ManualClock,
    pub state: AppState,
}

pub async fn start() -> Server {
    let cassette: Cassette = CASSETTE.iter().copied().collect();
    let clock = ManualClock::new(1_000);
    let registry = Registry::open(
        Storage::Memory,
        ClockSource::Manual(clock.clone()),
        Arc::new(MockProvider::new(cassette)),
    )
    .unwrap();
    let state = AppState::new(registry, TokenStore::new(Some(MASTER)));
    let (addr, _) = spawn_local(state.clone()).await.unwrap();
    Server {
        admin: Client::new(format!("http://{addr}")).with_token(MASTER),
        clock,
        state,
    }
}

pub fn small_config() -> TournamentConfig {
    let mut config = TournamentConfig {
        puzzle_piece_count: 2,
        glitch_probability: 1.0,
        ..TournamentConfig::default()
    };
    config.problems.retain(|p| p.round != Round::R1 || p.id == "r1-1" || p.id == "r1-2");
    config
}

pub struct Team {
    pub id: TeamId,
    pub client: Client,
}

pub struct Match {
    pub tid: TournamentId,
    pub admin: Client,
    pub judge: Client,
    pub spectator: Client,
    pub teams: Vec<Team>,
}

/// Creates a tournament with `names` teams and walks the first
/// `admitted` of them through Round 1. Ends in Round 1.
pub async fn setup(server: &Server, names: &[&str], admitted: usize) -> Match {
    let tid = server.admin.create_tournament(small_config()).await.unwrap();
    let admin_token = server
        .admin
        .role_token(&tid, battle_server::wire::Role::Admin, None)
        .await
        .unwrap();
    let admin = server.admin.with_token(admin_token);
    let judge = admin.with_token(
        admin
            .role_token(&tid, battle_server::wire::Role::Judge, Some("judge-1"))
            .await
            .unwrap(),
    );
    let spectator = admin.with_token(
        admin
            .role_token(&tid, battle_server::wire::Role::Spectator, None)
            .await
            .unwrap(),
    );
    let mut teams = Vec::new();
    for name in names {
        let id = admin.register_team(&tid, name).await.unwrap();
        let token = admin.team_token(&tid, &id).await.unwrap();
        teams.push(Team {
            id,
            client: admin.with_token(token),
        });
    }
    admin.advance(&tid).await.unwrap();
    for team in &teams[..admitted] {
        for problem in ["r1-1", "r1-2"] {
            let sid = team.client.submit(&tid, problem, "proof", &[]).await.unwrap();
            judge
                .judge(&tid, &sid, battle_core::model::Verdict::Correct, Default::default())
                .await
                .unwrap();
            judge.award_piece(&tid, &team.id, problem).await.unwrap();
        }
        let reply = team.client.entry(&tid, "passcode").await.unwrap();
        assert_eq!(reply.result, battle_core::model::EntryResult::Admitted);
    }
    Match {
        tid,
        admin,
        judge,
        spectator,
        teams,
    }
}
