//! Headless matches: scripted bots play a tournament through the public API
//! of an in-process server on a simulated clock.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use battle_core::ai_proxy::{ClaimVerdict, QueryRecord};
use battle_core::clock::{ClockSource, ManualClock};
use battle_core::journal::SyncPolicy;
use battle_core::model::{EntryResult, HintMark, Phase, QueryId, TeamId, TournamentId, Verdict};
use battle_core::recon::{FeedEvent, PrivateResponse};
use battle_core::scoring::Scoreboard;
use battle_core::{Presentation, Registry, Storage};
use battle_llm::{Cassette, MockProvider};
use battle_server::client::ClientError;
use battle_server::wire::{Role, ServerMessage};
use battle_server::{spawn_local, AppState, Client, TokenStore};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bots::Reaction;
use crate::scenario::{BotScript, Scenario, ScriptedQuery, ScriptedSubmission};

const SIM_ADMIN_TOKEN: &str = "sim-admin";
const JUDGE_NAME: &str = "sim-judge";
const CHANNEL_DRAIN: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Writes the journal under this directory instead of keeping it in memory.
    pub journal_dir: Option<PathBuf>,
    /// Replaces the scenario's own cassette.
    pub cassette: Option<Cassette>,
    /// Keeps a live channel open per bot and records what it delivers.
    pub collect_channels: bool,
    /// Simulated clock at the start of the match, in milliseconds.
    pub start_ms: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Script(#[from] crate::scenario::ScriptError),
    #[error("cassette miss: {0}")]
    CassetteMiss(String),
    #[error("{step}: {source}")]
    Api {
        step: String,
        #[source]
        source: ClientError,
    },
    #[error("server start failed: {0}")]
    Startup(String),
    #[error("{0}")]
    Unexpected(String),
}

trait Step<T> {
    fn step(self, what: impl FnOnce() -> String) -> Result<T, SimError>;
}

impl<T> Step<T> for Result<T, ClientError> {
    fn step(self, what: impl FnOnce() -> String) -> Result<T, SimError> {
        self.map_err(|source| {
            if source.code() == Some("ProviderUnavailable") {
                SimError::CassetteMiss(format!("{}: {source}", what()))
            } else {
                SimError::Api { step: what(), source }
            }
        })
    }
}

/// One bot's side of the match.
#[derive(Debug, Clone)]
pub struct BotReport {
    pub name: String,
    pub team_id: TeamId,
    pub cited: Vec<QueryId>,
    pub claims: Vec<(QueryId, ClaimVerdict)>,
    /// Feed events received over the channel, in arrival order.
    pub feed: Vec<FeedEvent>,
    /// Private responses received over the channel, in arrival order.
    pub private: Vec<PrivateResponse>,
    /// Every channel message as JSON, for byte-level scans.
    pub channel_text: String,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub tournament_id: TournamentId,
    pub phase: Phase,
    pub journal: Vec<u8>,
    pub scoreboard: Scoreboard,
    /// Full ledger export as JSON lines.
    pub ledger: String,
    pub records: Vec<QueryRecord>,
    pub feed: Vec<FeedEvent>,
    pub presentations: Vec<Presentation>,
    pub bots: Vec<BotReport>,
}

#[derive(Default)]
struct Inbox {
    feed: Vec<FeedEvent>,
    private: Vec<PrivateResponse>,
    text: String,
}

struct Bot<'a> {
    script: &'a BotScript,
    team_id: TeamId,
    client: Client,
    rng: ChaCha8Rng,
    cited: Vec<QueryId>,
    claims: Vec<(QueryId, ClaimVerdict)>,
    inbox: Option<Arc<Mutex<Inbox>>>,
}

struct Match<'a> {
    tid: TournamentId,
    clock: ManualClock,
    admin: Client,
    judge: Client,
    bots: Vec<Bot<'a>>,
}

impl Match<'_> {
    async fn advance(&self, expected: Phase) -> Result<(), SimError> {
        let phase = self.admin.advance(&self.tid).await.step(|| format!("advance to {expected}"))?;
        if phase != expected {
            return Err(SimError::Unexpected(format!("advanced to {phase}, expected {expected}")));
        }
        Ok(())
    }

    /// Submits and judges one solution.
    async fn solve(&self, bot: usize, item: &ScriptedSubmission, cite: &[QueryId]) -> Result<(), SimError> {
        let bot = &self.bots[bot];
        self.clock.advance_ms(bot.script.think_ms);
        let sid = bot
            .client
            .submit(&self.tid, &item.problem_id, &item.payload, cite)
            .await
            .step(|| format!("{} submits {}", bot.script.name, item.problem_id))?;
        let marks = if cite.is_empty() {
            BTreeMap::new()
        } else {
            let records = self.judge.query_records(&self.tid).await.step(|| "judge reads the ledger".into())?;
            cite.iter()
                .map(|id| {
                    let falsified = records.iter().any(|r| &r.id == id && r.falsified);
                    (id.clone(), if falsified { HintMark::Misled } else { HintMark::UsedCorrectly })
                })
                .collect()
        };
        self.judge
            .judge(&self.tid, &sid, item.verdict, marks)
            .await
            .step(|| format!("judge {sid}"))?;
        Ok(())
    }

    async fn round1(&self) -> Result<(), SimError> {
        let rounds = self.bots.iter().map(|b| b.script.round1.len()).max().unwrap_or(0);
        for i in 0..rounds {
            for (b, bot) in self.bots.iter().enumerate() {
                let Some(item) = bot.script.round1.get(i) else { continue };
                self.solve(b, item, &[]).await?;
                if item.verdict == Verdict::Correct {
                    self.judge
                        .award_piece(&self.tid, &bot.team_id, &item.problem_id)
                        .await
                        .step(|| format!("award {} to {}", item.problem_id, bot.script.name))?;
                }
            }
        }
        let passcode = self.admin.summary(&self.tid).await.step(|| "read config".into())?.config["passcode"]
            .as_str()
            .unwrap_or_default()
            .to_owned();
        for bot in &self.bots {
            self.clock.advance_ms(bot.script.think_ms);
            let reply = bot.client.entry(&self.tid, &passcode).await.step(|| format!("{} enters", bot.script.name))?;
            if reply.result != EntryResult::Admitted {
                return Err(SimError::Unexpected(format!("{} was not admitted: {:?}", bot.script.name, reply.result)));
            }
        }
        Ok(())
    }

    async fn ask(&mut self, b: usize, query: &ScriptedQuery) -> Result<(), SimError> {
        let bot = &mut self.bots[b];
        self.clock.advance_ms(bot.script.think_ms);
        let reply = bot
            .client
            .query(&self.tid, query.mode, &query.text)
            .await
            .step(|| format!("{} asks {:?}", bot.script.name, query.text))?;
        match bot.script.policy.react(&mut bot.rng, &reply.answer, &query.knowledge) {
            Reaction::Cite => bot.cited.push(reply.query_id),
            Reaction::Claim => {
                let claim = bot
                    .client
                    .claim(&self.tid, &reply.query_id, "answer disagrees with an independent check")
                    .await
                    .step(|| format!("{} claims {}", bot.script.name, reply.query_id))?;
                bot.claims.push((reply.query_id, claim.verdict));
            }
        }
        Ok(())
    }

    async fn round2(&mut self) -> Result<(), SimError> {
        let rounds = self.bots.iter().map(|b| b.script.duel.len()).max().unwrap_or(0);
        for i in 0..rounds {
            for b in 0..self.bots.len() {
                let script = self.bots[b].script;
                if let Some(query) = script.duel.get(i) {
                    self.ask(b, query).await?;
                }
            }
        }
        let rounds = self.bots.iter().map(|b| b.script.round2.len()).max().unwrap_or(0);
        for i in 0..rounds {
            for b in 0..self.bots.len() {
                let Some(item) = self.bots[b].script.round2.get(i) else { continue };
                let cite = if i == 0 { self.bots[b].cited.clone() } else { Vec::new() };
                self.solve(b, item, &cite).await?;
            }
        }
        Ok(())
    }

    async fn recon(&self) -> Result<(), SimError> {
        let window = self.admin.open_window(&self.tid).await.step(|| "open the window".into())?;
        let rounds = self.bots.iter().map(|b| b.script.recon.len()).max().unwrap_or(0);
        for i in 0..rounds {
            for bot in &self.bots {
                let Some(query) = bot.script.recon.get(i) else { continue };
                self.clock.advance_ms(bot.script.think_ms);
                bot.client
                    .recon_query(&self.tid, None, &query.text)
                    .await
                    .step(|| format!("{} posts {:?}", bot.script.name, query.text))?;
            }
        }
        self.clock.set(window.closes_at.max(self.clock_now()));
        Ok(())
    }

    fn clock_now(&self) -> u64 {
        use battle_core::clock::Clock;
        self.clock.now_ms()
    }

    async fn round3(&self) -> Result<(), SimError> {
        let rounds = self.bots.iter().map(|b| b.script.round3.len()).max().unwrap_or(0);
        for i in 0..rounds {
            for (b, bot) in self.bots.iter().enumerate() {
                if let Some(item) = bot.script.round3.get(i) {
                    self.solve(b, item, &[]).await?;
                }
            }
        }
        Ok(())
    }

    async fn presentations(&self) -> Result<(), SimError> {
        for bot in &self.bots {
            self.clock.advance_ms(bot.script.think_ms);
            self.judge
                .score_presentation(&self.tid, &bot.team_id, bot.script.interaction_score)
                .await
                .step(|| format!("score {}", bot.script.name))?;
        }
        Ok(())
    }
}

fn spawn_collector(mut channel: battle_server::client::Channel, inbox: Arc<Mutex<Inbox>>) {
    tokio::spawn(async move {
        while let Some(Ok(message)) = channel.next().await {
            let mut inbox = inbox.lock().unwrap_or_else(|p| p.into_inner());
            if let Ok(text) = serde_json::to_string(&message) {
                inbox.text.push_str(&text);
                inbox.text.push('\n');
            }
            match message {
                ServerMessage::Feed { event } => inbox.feed.push(event),
                ServerMessage::Private { response } => inbox.private.push(response),
                _ => {}
            }
        }
    });
}

/// Waits until every channel has delivered the full feed and all of its
/// team's private responses.
async fn drain(bots: &[Bot<'_>], feed_len: usize, private_len: &[usize]) -> Result<(), SimError> {
    let deadline = tokio::time::Instant::now() + CHANNEL_DRAIN;
    loop {
        let done = bots.iter().zip(private_len).all(|(bot, expected)| match &bot.inbox {
            Some(inbox) => {
                let inbox = inbox.lock().unwrap_or_else(|p| p.into_inner());
                inbox.feed.len() >= feed_len && inbox.private.len() >= *expected
            }
            None => true,
        });
        if done {
            return Ok(());
        }
        if tokio::time::Instant::now() > deadline {
            return Err(SimError::Unexpected("channels did not deliver the full match in time".into()));
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

/// Plays `scenario` to the end and returns everything it produced.
pub async fn simulate(scenario: &Scenario, options: &SimOptions) -> Result<SimOutcome, SimError> {
    let clock = ManualClock::new(options.start_ms);
    let storage = match &options.journal_dir {
        Some(dir) => Storage::Directory {
            dir: dir.clone(),
            sync: SyncPolicy::Flush,
        },
        None => Storage::Memory,
    };
    let cassette = options.cassette.clone().unwrap_or_else(|| scenario.cassette.clone());
    let registry = Registry::open(storage, ClockSource::Manual(clock.clone()), Arc::new(MockProvider::new(cassette)))
        .map_err(|e| SimError::Startup(e.to_string()))?;
    let state = AppState::new(registry, TokenStore::new(Some(SIM_ADMIN_TOKEN)));
    let (addr, server) = spawn_local(state).await.map_err(|e| SimError::Startup(e.to_string()))?;
    let result = play(scenario, options, clock, Client::new(format!("http://{addr}"))).await;
    server.abort();
    result
}

async fn play(scenario: &Scenario, options: &SimOptions, clock: ManualClock, root: Client) -> Result<SimOutcome, SimError> {
    let root = root.with_token(SIM_ADMIN_TOKEN);
    let tid = root
        .create_tournament(scenario.config.clone())
        .await
        .step(|| "create the tournament".into())?;
    let admin = root.with_token(root.role_token(&tid, Role::Admin, None).await.step(|| "admin token".into())?);
    let judge = root.with_token(
        root.role_token(&tid, Role::Judge, Some(JUDGE_NAME))
            .await
            .step(|| "judge token".into())?,
    );
    let mut bots = Vec::new();
    for (index, script) in scenario.bots.iter().enumerate() {
        let team_id = admin
            .register_team(&tid, &script.name)
            .await
            .step(|| format!("register {}", script.name))?;
        let client = admin.with_token(
            admin
                .team_token(&tid, &team_id)
                .await
                .step(|| format!("token for {}", script.name))?,
        );
        let inbox = if options.collect_channels {
            let channel = client.channel(&tid, 0, 0).await.step(|| format!("{} connects", script.name))?;
            let inbox = Arc::new(Mutex::new(Inbox::default()));
            spawn_collector(channel, inbox.clone());
            Some(inbox)
        } else {
            None
        };
        bots.push(Bot {
            script,
            team_id,
            client,
            rng: ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(index as u64).rotate_left(17)),
            cited: Vec::new(),
            claims: Vec::new(),
            inbox,
        });
    }
    let mut game = Match {
        tid: tid.clone(),
        clock,
        admin,
        judge,
        bots,
    };

    game.advance(Phase::Round1).await?;
    game.round1().await?;
    game.advance(Phase::Round2).await?;
    game.round2().await?;
    game.advance(Phase::Round3Recon).await?;
    game.recon().await?;
    game.advance(Phase::Round3Solve).await?;
    game.round3().await?;
    game.advance(Phase::Round3Presentation).await?;
    game.presentations().await?;
    game.advance(Phase::Finished).await?;

    let admin = &game.admin;
    let feed = admin.feed(&tid, 0).await.step(|| "read the feed".into())?;
    let records = admin.query_records(&tid).await.step(|| "read the ledger".into())?;
    let private_len: Vec<usize> = game
        .bots
        .iter()
        .map(|b| records.iter().filter(|r| r.team_id == b.team_id).count())
        .collect();
    drain(&game.bots, feed.len(), &private_len).await?;

    let summary = admin.summary(&tid).await.step(|| "read the summary".into())?;
    let outcome = SimOutcome {
        journal: admin.journal(&tid).await.step(|| "read the journal".into())?,
        scoreboard: admin.scoreboard(&tid).await.step(|| "read the scoreboard".into())?,
        ledger: admin.ledger(&tid).await.step(|| "export the ledger".into())?,
        presentations: admin.presentations(&tid).await.step(|| "read presentations".into())?,
        phase: summary.phase,
        records,
        feed,
        bots: game
            .bots
            .into_iter()
            .map(|bot| {
                let inbox = bot
                    .inbox
                    .map(|i| std::mem::take(&mut *i.lock().unwrap_or_else(|p| p.into_inner())))
                    .unwrap_or_default();
                BotReport {
                    name: bot.script.name.clone(),
                    team_id: bot.team_id,
                    cited: bot.cited,
                    claims: bot.claims,
                    feed: inbox.feed,
                    private: inbox.private,
                    channel_text: inbox.text,
                }
            })
            .collect(),
        tournament_id: tid,
    };
    Ok(outcome)
}

impl SimOutcome {
    /// Markers that showed up in `bot`'s channel although they belong to
    /// responses generated for other teams.
    pub fn foreign_markers<'a>(&self, scenario: &'a Scenario, bot: usize) -> BTreeSet<&'a str> {
        let own: BTreeSet<&str> = scenario.bots[bot].markers().collect();
        let text = &self.bots[bot].channel_text;
        scenario
            .bots
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != bot)
            .flat_map(|(_, b)| b.markers())
            .filter(|m| !own.contains(m) && text.contains(m))
            .collect()
    }
}
