//! Tournament engine for three-round math battles against an unreliable AI
//! assistant.
//!
//! The crate holds the phase state machine, the scoring rules, the AI proxy
//! with its truth ledger, the reconnaissance feed and the append-only journal
//! from which any tournament can be replayed exactly.

pub mod ai_proxy;
pub mod clock;
pub mod config;
pub mod engine;
pub mod error;
pub mod handle;
pub mod journal;
pub mod model;
mod points;
pub mod recon;
pub mod rng;
pub mod scoring;
pub mod store;

pub use config::{Problem, ProviderSettings, TournamentConfig};
pub use engine::{Engine, Presentation, QueryKind, QueryOutcome, QueryPlan, Tournament};
pub use error::EngineError;
pub use handle::TournamentHandle;
pub use points::Points;
pub use store::{Registry, Storage};
