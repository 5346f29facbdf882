//! Operator tooling for math battle tournaments: journal-backed admin
//! commands, replay and export, and fully simulated matches played by
//! scripted bots through the public API.

pub mod bots;
pub mod cli;
pub mod error;
pub mod scenario;
pub mod sim;

pub use bots::BotPolicy;
pub use error::CliError;
pub use scenario::{BotScript, Family, Scenario, ScenarioOptions, ScriptError};
pub use sim::{simulate, SimOptions, SimOutcome};
