//! Network surface for tournaments: JSON endpoints, bearer-token roles, and
//! a WebSocket channel for the live feed and private answers. [`client`]
//! is a typed SDK for the same surface.

pub mod auth;
pub mod channel;
pub mod client;
pub mod error;
pub mod routes;
pub mod wire;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use battle_core::clock::ClockSource;
use battle_core::journal::SyncPolicy;
use battle_core::{Registry, Storage};
use battle_llm::{Cassette, HttpProvider, HttpProviderConfig, MockProvider, Provider};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub use auth::TokenStore;
pub use client::Client;
pub use error::ApiError;
pub use routes::router;

pub const ENV_BIND: &str = "BATTLE_BIND";
pub const ENV_JOURNAL_DIR: &str = "BATTLE_JOURNAL_DIR";
pub const ENV_ADMIN_TOKEN: &str = "BATTLE_ADMIN_TOKEN";
pub const ENV_CASSETTE: &str = "BATTLE_CASSETTE";
pub const ENV_JOURNAL_SYNC: &str = "BATTLE_JOURNAL_SYNC";

pub const TOKEN_FILE: &str = "tokens.jsonl";
pub const DEFAULT_TICK: Duration = Duration::from_millis(250);

#[derive(Clone)]
pub struct AppState {
    registry: Arc<Registry>,
    tokens: Arc<TokenStore>,
}

impl AppState {
    pub fn new(registry: Registry, tokens: TokenStore) -> Self {
        AppState {
            registry: Arc::new(registry),
            tokens: Arc::new(tokens),
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn tokens(&self) -> &TokenStore {
        &self.tokens
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("cannot load cassette: {0}")]
    Cassette(#[from] battle_llm::CassetteError),
    #[error(transparent)]
    Engine(#[from] battle_core::EngineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid {name}: {value:?}")]
    Env { name: &'static str, value: String },
}

/// Server settings, normally read from the environment.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub journal_dir: Option<PathBuf>,
    pub admin_token: Option<String>,
    pub cassette: Option<PathBuf>,
    pub sync: SyncPolicy,
    pub provider: Option<HttpProviderConfig>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            journal_dir: None,
            admin_token: None,
            cassette: None,
            sync: SyncPolicy::Always,
            provider: None,
        }
    }
}

fn env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

impl ServerConfig {
    pub fn from_env() -> Result<Self, StartupError> {
        let mut config = ServerConfig::default();
        if let Some(bind) = env(ENV_BIND) {
            config.bind = bind.parse().map_err(|_| StartupError::Env {
                name: ENV_BIND,
                value: bind,
            })?;
        }
        config.journal_dir = env(ENV_JOURNAL_DIR).map(PathBuf::from);
        config.admin_token = env(ENV_ADMIN_TOKEN);
        config.cassette = env(ENV_CASSETTE).map(PathBuf::from);
        if let Some(sync) = env(ENV_JOURNAL_SYNC) {
            config.sync = match sync.as_str() {
                "always" => SyncPolicy::Always,
                "flush" => SyncPolicy::Flush,
                _ => {
                    return Err(StartupError::Env {
                        name: ENV_JOURNAL_SYNC,
                        value: sync,
                    })
                }
            };
        }
        config.provider = HttpProviderConfig::from_env();
        Ok(config)
    }

    /// A cassette takes precedence over an HTTP provider. With neither,
    /// every provider-backed query fails with a cassette miss.
    pub fn provider(&self) -> Result<Arc<dyn Provider>, StartupError> {
        if let Some(path) = &self.cassette {
            return Ok(Arc::new(MockProvider::new(Cassette::load(path)?)));
        }
        if let Some(http) = &self.provider {
            return Ok(Arc::new(HttpProvider::new(http.clone())));
        }
        Ok(Arc::new(MockProvider::new(Cassette::new())))
    }

    pub fn build_state(&self, clock: ClockSource) -> Result<AppState, StartupError> {
        let provider = self.provider()?;
        let (storage, tokens) = match &self.journal_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let tokens = TokenStore::persistent(self.admin_token.as_deref(), dir.join(TOKEN_FILE))?;
                let storage = Storage::Directory {
                    dir: dir.clone(),
                    sync: self.sync,
                };
                (storage, tokens)
            }
            None => (Storage::Memory, TokenStore::new(self.admin_token.as_deref())),
        };
        let registry = Registry::open(storage, clock, provider)?;
        Ok(AppState::new(registry, tokens))
    }
}

/// Periodically commits time-driven events such as window expiry, so live
/// subscribers see them without waiting for the next request.
pub fn spawn_ticker(state: AppState, period: Duration) -> JoinHandle<()> {
    tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        loop {
            interval.tick().await;
            for handle in state.registry().handles() {
                if let Err(e) = handle.tick() {
                    tracing::error!(tournament = %handle.id(), "tick failed: {e}");
                }
            }
        }
    })
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    let ticker = spawn_ticker(state.clone(), DEFAULT_TICK);
    let result = axum::serve(listener, router(state)).await;
    ticker.abort();
    result
}

/// Binds an ephemeral loopback port and serves in the background.
pub async fn spawn_local(state: AppState) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0))).await?;
    let addr = listener.local_addr()?;
    let task = tokio::spawn(serve(listener, state));
    Ok((addr, task))
}
