use std::path::PathBuf;

use battle_core::journal::JournalError;
use battle_core::EngineError;
use battle_llm::CassetteError;
use battle_server::client::ClientError;

use crate::sim::SimError;

pub const EXIT_OK: i32 = 0;
/// The operation was refused by the tournament rules.
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// Files, journals or the server could not be read or written.
pub const EXIT_IO: i32 = 3;
/// The assistant provider or a cassette failed.
pub const EXIT_PROVIDER: i32 = 4;
/// A simulation script is inconsistent.
pub const EXIT_SCRIPT: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Api(#[from] ClientError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Cassette(#[from] CassetteError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] battle_mathexpr::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("server: {0}")]
    Server(String),
}

fn engine_exit(error: &EngineError) -> i32 {
    match error {
        EngineError::Journal(_) | EngineError::CorruptRecord { .. } => EXIT_IO,
        EngineError::ProviderUnavailable(_) => EXIT_PROVIDER,
        _ => EXIT_DOMAIN,
    }
}

fn api_exit(error: &ClientError) -> i32 {
    match error.code() {
        Some("Journal" | "CorruptRecord") => EXIT_IO,
        Some("ProviderUnavailable") => EXIT_PROVIDER,
        Some(_) => EXIT_DOMAIN,
        None => EXIT_IO,
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Engine(e) => engine_exit(e),
            CliError::Api(e) => api_exit(e),
            CliError::Io { .. } | CliError::Journal(_) | CliError::Config(_) | CliError::Server(_) => EXIT_IO,
            CliError::Cassette(_) => EXIT_PROVIDER,
            CliError::Eval(_) => EXIT_DOMAIN,
            CliError::Sim(e) => match e {
                SimError::Script(_) | SimError::Unexpected(_) => EXIT_SCRIPT,
                SimError::CassetteMiss(_) => EXIT_PROVIDER,
                SimError::Api { source, .. } => api_exit(source),
                SimError::Startup(_) => EXIT_IO,
            },
        }
    }

    /// Stable name printed in front of the message.
    pub fn code(&self) -> &str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Engine(e) => e.code(),
            CliError::Api(e) => e.code().unwrap_or("Transport"),
            CliError::Io { .. } => "Io",
            CliError::Journal(_) => "Journal",
            CliError::Cassette(_) => "Cassette",
            CliError::Config(_) => "Config",
            CliError::Eval(_) => "Eval",
            CliError::Sim(SimError::Script(_)) => "ScriptError",
            CliError::Sim(SimError::CassetteMiss(_)) => "CassetteMiss",
            CliError::Sim(SimError::Api { source, .. }) => source.code().unwrap_or("Transport"),
            CliError::Sim(_) => "Simulation",
            CliError::Server(_) => "Server",
        }
    }
}
