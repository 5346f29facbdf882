//! Command-line surface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use battle_core::clock::ClockSource;
use battle_core::journal::{self, FileJournal, SyncPolicy};
use battle_core::model::{Actor, TeamId, TournamentId};
use battle_core::scoring::Scoreboard;
use battle_core::{Engine, Tournament, TournamentConfig, TournamentHandle};
use battle_llm::{Cassette, MockProvider};
use battle_server::wire::{IssueToken, Role};
use battle_server::{Client, ServerConfig, TokenStore};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bots::parse_policies;
use crate::error::CliError;
use crate::scenario::{Family, Scenario, ScenarioOptions, ScriptError};
use crate::sim::{simulate, SimOptions};

impl From<ScriptError> for CliError {
    fn from(e: ScriptError) -> Self {
        CliError::Sim(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "battle-admin", version, about = "Operate math battle tournaments")]
pub struct Cli {
    /// Tournament configuration as JSON; missing fields take defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Overrides the configuration's rng seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Directory holding tournament journals and the token file.
    #[arg(long, global = true, value_name = "PATH", env = "BATTLE_JOURNAL_DIR")]
    pub journal_dir: Option<PathBuf>,
    /// Prompt/response cassette for the mock provider.
    #[arg(long, global = true, value_name = "FILE", env = "BATTLE_CASSETTE")]
    pub cassette: Option<PathBuf>,
    /// Talk to a running server instead of the journal directory.
    #[arg(long, global = true, value_name = "URL", env = "BATTLE_SERVER")]
    pub server: Option<String>,
    /// Bearer token for --server.
    #[arg(long, global = true, value_name = "TOKEN", env = "BATTLE_TOKEN")]
    pub token: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a tournament and print its id.
    Create,
    /// Register a team and print its id.
    Register {
        #[arg(long, short)]
        tournament: String,
        name: String,
    },
    /// Issue an access token.
    Token {
        #[arg(long, short)]
        tournament: String,
        #[arg(long, value_enum)]
        role: RoleArg,
        /// Team id, for team tokens.
        #[arg(long)]
        team: Option<String>,
        /// Judge name, for judge tokens.
        #[arg(long)]
        name: Option<String>,
    },
    /// Move a tournament to its next phase and print it.
    Advance {
        #[arg(long, short)]
        tournament: String,
    },
    /// Rebuild a tournament from its journal file and print the scoreboard.
    Replay {
        journal: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Write scoreboard, ledger, score events and feed files.
    Export {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Evaluate an arithmetic expression exactly.
    Eval { expression: String },
    /// Play a scripted match over a loopback server.
    Simulate(SimulateArgs),
    /// Run the HTTP and WebSocket server.
    Serve {
        #[arg(long, env = "BATTLE_BIND")]
        bind: Option<std::net::SocketAddr>,
        /// Master admin token; generated and printed when absent.
        #[arg(long, env = "BATTLE_ADMIN_TOKEN")]
        admin_token: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    /// Journal file to export from.
    #[arg(long, conflicts_with = "tournament")]
    pub journal: Option<PathBuf>,
    /// Tournament id in --journal-dir or on --server.
    #[arg(long, short)]
    pub tournament: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated bot policies: blind, skeptic or mixed:<p>.
    #[arg(long, default_value = "skeptic,blind,mixed:0.5,blind")]
    pub bots: String,
    /// Round-2 queries per bot.
    #[arg(long, default_value_t = 16)]
    pub queries: usize,
    /// Reconnaissance prompts per bot.
    #[arg(long, default_value_t = 3)]
    pub recon: usize,
    /// Give every bot the same duel script.
    #[arg(long)]
    pub shared: bool,
    /// Restrict duel queries to these families.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub families: Vec<FamilyArg>,
    /// Write the generated cassette here.
    #[arg(long, value_name = "FILE")]
    pub write_cassette: Option<PathBuf>,
    /// Write the journal here.
    #[arg(long, value_name = "FILE")]
    pub journal_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Admin,
    Judge,
    Team,
    Spectator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Strategy,
    Integral,
    Fact,
    Arithmetic,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Strategy => Family::Strategy,
            FamilyArg::Integral => Family::Integral,
            FamilyArg::Fact => Family::Fact,
            FamilyArg::Arithmetic => Family::Arithmetic,
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Server(e.to_string()))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .and_then(|_| if text.ends_with('\n') { Ok(()) } else { out.write_all(b"\n") })
        .map_err(|e| CliError::io("<stdout>", e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<TournamentConfig, CliError> {
    let mut config = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => TournamentConfig::default(),
    };
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    Ok(config)
}

fn scoreboard_text(board: &Scoreboard, format: Format) -> String {
    match format {
        Format::Csv => board.to_csv(),
        Format::Json => serde_json::to_string_pretty(board).expect("scoreboard serializes"),
    }
}

fn lines<T: serde::Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|item| serde_json::to_string(item).expect("item serializes") + "\n")
        .collect()
}

impl Cli {
    fn journal_dir(&self) -> Result<&Path, CliError> {
        self.journal_dir
            .as_deref()
            .ok_or_else(|| CliError::Usage("--journal-dir (or BATTLE_JOURNAL_DIR) is required".into()))
    }

    fn remote(&self) -> Option<Client> {
        let server = self.server.as_ref()?;
        let client = Client::new(server.clone());
        Some(match &self.token {
            Some(token) => client.with_token(token.clone()),
            None => client,
        })
    }

    /// Opens one tournament from the journal directory on the wall clock.
    fn open_local(&self, tournament: &str) -> Result<TournamentHandle, CliError> {
        let dir = self.journal_dir()?;
        let id = TournamentId(tournament.to_owned());
        let path = journal::journal_path(dir, &id);
        if !path.exists() {
            return Err(battle_core::EngineError::UnknownTournament(tournament.to_owned()).into());
        }
        let (file, records) = FileJournal::open(&path, SyncPolicy::Always)?;
        let engine = Engine::restore(&records, Box::new(file))?;
        let clock = ClockSource::Wall.clock_for(engine.state().clock());
        Ok(TournamentHandle::new(engine, clock, Arc::new(MockProvider::new(Cassette::new()))))
    }

    fn token_store(&self) -> Result<TokenStore, CliError> {
        let path = self.journal_dir()?.join(battle_server::TOKEN_FILE);
        TokenStore::persistent(None, &path).map_err(|e| CliError::io(path, e))
    }
}

/// Runs one command, writing its normal output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Create => create(cli, out),
        Command::Register { tournament, name } => register(cli, out, tournament, name),
        Command::Token {
            tournament,
            role,
            team,
            name,
        } => token(cli, out, tournament, *role, team.as_deref(), name.as_deref()),
        Command::Advance { tournament } => advance(cli, out, tournament),
        Command::Replay { journal, format } => replay(out, journal, *format),
        Command::Export { source, out: dir } => export(cli, out, source, dir),
        Command::Eval { expression } => {
            let value = battle_mathexpr::eval_str(expression)?;
            write_out(out, &value.to_string())
        }
        Command::Simulate(args) => run_simulation(cli, out, args),
        Command::Serve { bind, admin_token } => serve(cli, out, *bind, admin_token.clone()),
    }
}

fn create(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref(), cli.seed)?;
    if let Some(client) = cli.remote() {
        let id = runtime()?.block_on(client.create_tournament(config))?;
        return write_out(out, id.as_str());
    }
    let dir = cli.journal_dir()?;
    let registry = battle_core::Registry::open(
        battle_core::Storage::Directory {
            dir: dir.to_path_buf(),
            sync: SyncPolicy::Always,
        },
        ClockSource::Wall,
        Arc::new(MockProvider::new(Cassette::new())),
    )?;
    let handle = registry.create(config)?;
    write_out(out, handle.id().as_str())
}

fn register(cli: &Cli, out: &mut dyn Write, tournament: &str, name: &str) -> Result<(), CliError> {
    if let Some(client) = cli.remote() {
        let tid = TournamentId(tournament.to_owned());
        let id = runtime()?.block_on(client.register_team(&tid, name))?;
        return write_out(out, id.as_str());
    }
    let handle = cli.open_local(tournament)?;
    let id = handle.execute(|engine, now| engine.register_team(now, &Actor::Admin, name))?;
    write_out(out, id.as_str())
}

fn token(
    cli: &Cli,
    out: &mut dyn Write,
    tournament: &str,
    role: RoleArg,
    team: Option<&str>,
    name: Option<&str>,
) -> Result<(), CliError> {
    let tid = TournamentId(tournament.to_owned());
    if let Some(client) = cli.remote() {
        let role = match role {
            RoleArg::Admin => Role::Admin,
            RoleArg::Judge => Role::Judge,
            RoleArg::Team => Role::Team,
            RoleArg::Spectator => Role::Spectator,
        };
        let request = IssueToken {
            role,
            team_id: team.map(|t| TeamId(t.to_owned())),
            name: name.map(str::to_owned),
        };
        let issued = runtime()?.block_on(client.issue_token(&tid, request))?;
        return write_out(out, &issued.token);
    }
    let handle = cli.open_local(tournament)?;
    let actor = match role {
        RoleArg::Admin => Actor::Admin,
        RoleArg::Spectator => Actor::Spectator,
        RoleArg::Judge => Actor::Judge(
            name.ok_or_else(|| CliError::Usage("judge tokens need --name".into()))?
                .to_owned(),
        ),
        RoleArg::Team => {
            let team = TeamId(
                team.ok_or_else(|| CliError::Usage("team tokens need --team".into()))?
                    .to_owned(),
            );
            handle.read(|t| t.team(&team).map(|_| ()))?;
            Actor::Team(team)
        }
    };
    let store = cli.token_store()?;
    let token = store
        .issue(&tid, actor)
        .map_err(|e| CliError::io(cli.journal_dir().unwrap_or(Path::new(".")), e))?;
    write_out(out, &token)
}

fn advance(cli: &Cli, out: &mut dyn Write, tournament: &str) -> Result<(), CliError> {
    if let Some(client) = cli.remote() {
        let tid = TournamentId(tournament.to_owned());
        let phase = runtime()?.block_on(client.advance(&tid))?;
        return write_out(out, &phase.to_string());
    }
    let handle = cli.open_local(tournament)?;
    let phase = handle.execute(|engine, now| engine.advance_phase(now, &Actor::Admin))?;
    write_out(out, &phase.to_string())
}

/// Reads a journal file, reporting a dropped partial final line on stderr.
pub fn load_journal(path: &Path) -> Result<Tournament, CliError> {
    let contents = journal::read_journal_file(path).map_err(|e| match e {
        journal::JournalError::Io(source) => CliError::io(path, source),
        other => CliError::Journal(other),
    })?;
    if contents.torn_tail {
        eprintln!("warning: {}: dropped a partial final record", path.display());
    }
    Ok(journal::replay(&contents.records)?)
}

fn replay(out: &mut dyn Write, path: &Path, format: Format) -> Result<(), CliError> {
    let state = load_journal(path)?;
    write_out(out, &scoreboard_text(&state.scoreboard(), format))
}

/// The files `export` writes, by name.
pub struct ExportFiles {
    pub scoreboard_csv: String,
    pub scoreboard_json: String,
    pub ledger: String,
    pub score_events: String,
    pub feed: String,
}

impl ExportFiles {
    pub fn from_state(state: &Tournament) -> Self {
        let board = state.scoreboard();
        ExportFiles {
            scoreboard_csv: board.to_csv(),
            scoreboard_json: scoreboard_text(&board, Format::Json),
            ledger: state.ledger_export(&Actor::Admin),
            score_events: lines(state.score_events()),
            feed: lines(state.feed()),
        }
    }

    fn write(&self, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in [
            ("scoreboard.csv", &self.scoreboard_csv),
            ("scoreboard.json", &self.scoreboard_json),
            ("ledger.jsonl", &self.ledger),
            ("score_events.jsonl", &self.score_events),
            ("feed.jsonl", &self.feed),
        ] {
            let path = dir.join(name);
            write_file(&path, body.as_bytes())?;
            write_out(out, &path.display().to_string())?;
        }
        Ok(())
    }
}

fn export(cli: &Cli, out: &mut dyn Write, source: &Source, dir: &Path) -> Result<(), CliError> {
    let files = match (&source.journal, &source.tournament) {
        (Some(path), _) => ExportFiles::from_state(&load_journal(path)?),
        (None, Some(tournament)) => match cli.remote() {
            Some(client) => {
                let tid = TournamentId(tournament.clone());
                runtime()?.block_on(async {
                    let board = client.scoreboard(&tid).await?;
                    Ok::<_, CliError>(ExportFiles {
                        scoreboard_csv: board.to_csv(),
                        scoreboard_json: scoreboard_text(&board, Format::Json),
                        ledger: client.ledger(&tid).await?,
                        score_events: lines(&client.score_events(&tid).await?),
                        feed: lines(&client.feed(&tid, 0).await?),
                    })
                })?
            }
            None => {
                let handle = cli.open_local(tournament)?;
                handle.read(ExportFiles::from_state)
            }
        },
        (None, None) => return Err(CliError::Usage("export needs --journal or --tournament".into())),
    };
    files.write(dir, out)
}

fn run_simulation(cli: &Cli, out: &mut dyn Write, args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref(), None)?;
    let seed = cli.seed.unwrap_or(config.rng_seed);
    let policies = parse_policies(&args.bots).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut options = ScenarioOptions {
        duel_queries: args.queries,
        recon_queries: args.recon,
        shared_script: args.shared,
        ..ScenarioOptions::default()
    };
    if !args.families.is_empty() {
        options.families = args.families.iter().map(|f| Family::from(*f)).collect();
    }
    let scenario = Scenario::generate(&config, &policies, seed, &options)?;
    if let Some(path) = &args.write_cassette {
        scenario.cassette.save(path)?;
    }
    let cassette = cli.cassette.as_deref().map(Cassette::load).transpose()?;
    let sim_options = SimOptions {
        journal_dir: cli.journal_dir.clone(),
        cassette,
        ..SimOptions::default()
    };
    let outcome = runtime()?.block_on(simulate(&scenario, &sim_options))?;
    if let Some(path) = &args.journal_out {
        write_file(path, &outcome.journal)?;
    }
    eprintln!(
        "simulated {} with {} bots, seed {seed}",
        outcome.tournament_id,
        scenario.bots.len()
    );
    write_out(out, &scoreboard_text(&outcome.scoreboard, args.format))
}

fn serve(
    cli: &Cli,
    out: &mut dyn Write,
    bind: Option<std::net::SocketAddr>,
    admin_token: Option<String>,
) -> Result<(), CliError> {
    let mut config = ServerConfig::from_env().map_err(|e| CliError::Server(e.to_string()))?;
    if let Some(bind) = bind {
        config.bind = bind;
    }
    config.journal_dir = cli.journal_dir.clone().or(config.journal_dir);
    config.cassette = cli.cassette.clone().or(config.cassette);
    config.admin_token = admin_token.or(config.admin_token);
    if config.admin_token.is_none() {
        let token = format!("adm_{:032x}", rand::random::<u128>());
        write_out(out, &format!("admin token: {token}"))?;
        config.admin_token = Some(token);
    }
    let state = config
        .build_state(ClockSource::Wall)
        .map_err(|e| CliError::Server(e.to_string()))?;
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind(config.bind)
            .await
            .map_err(|e| CliError::Server(format!("bind {}: {e}", config.bind)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Server(e.to_string()))?;
        write_out(out, &format!("listening on http://{addr}"))?;
        out.flush().map_err(|e| CliError::io("<stdout>", e))?;
        tokio::select! {
            result = battle_server::serve(listener, state) => result.map_err(|e| CliError::Server(e.to_string())),
            _ = tokio::signal::ctrl_c() => Ok(()),
        }
    })
}
