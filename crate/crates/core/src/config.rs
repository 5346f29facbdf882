use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ai_proxy::Mode;
use crate::error::EngineError;
use crate::model::Round;
use crate::Points;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub round: Round,
    /// AI mode used for reconnaissance queries tagged with this problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_mode: Option<Mode>,
}

impl Problem {
    pub fn new(id: impl Into<String>, round: Round) -> Self {
        Self {
            id: id.into(),
            round,
            recon_mode: None,
        }
    }
}

/// Request parameters sent with every provider call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    pub max_length: u32,
    pub temperature: f32,
    pub timeout_secs: u64,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        Self {
            max_length: 512,
            temperature: 0.7,
            timeout_secs: 30,
        }
    }
}

/// Frozen at creation; every field has a default so partial documents load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentConfig {
    pub quota_min_queries: u32,
    pub quota_penalty_per_missing: Points,
    pub recon_duration_secs: u64,
    pub ai_interaction_weight: f64,
    pub puzzle_piece_count: u32,
    pub max_entry_attempts: u32,
    pub glitch_probability: f64,
    pub strategy_flaw_probability: f64,
    pub rng_seed: u64,
    pub passcode: String,
    pub problems: Vec<Problem>,
    /// Calculator expressions with at most this many operators are answered
    /// exactly and never falsified.
    pub simple_operator_limit: u32,
    /// When set, Round-1 verdicts also score; by default they only gate entry.
    pub round1_scores_count: bool,
    /// Cost of a rejected deception claim; zero disables the penalty.
    pub rejected_claim_penalty: Points,
    pub recon_query_cap: Option<u32>,
    pub recon_mode: Mode,
    pub ai_access_in_round3_solve: bool,
    pub provider: ProviderSettings,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        let mut problems: Vec<Problem> = (1..=6).map(|i| Problem::new(format!("r1-{i}"), Round::R1)).collect();
        problems.extend((1..=3).map(|i| Problem::new(format!("r2-{i}"), Round::R2)));
        problems.extend((1..=2).map(|i| Problem::new(format!("r3-{i}"), Round::R3)));
        Self {
            quota_min_queries: 15,
            quota_penalty_per_missing: Points::from_tenths(5),
            recon_duration_secs: 900,
            ai_interaction_weight: 0.30,
            puzzle_piece_count: 6,
            max_entry_attempts: 3,
            glitch_probability: 0.5,
            strategy_flaw_probability: 1.0,
            rng_seed: 0,
            passcode: "passcode".into(),
            problems,
            simple_operator_limit: 4,
            round1_scores_count: false,
            rejected_claim_penalty: Points::ZERO,
            recon_query_cap: None,
            recon_mode: Mode::Advisor,
            ai_access_in_round3_solve: false,
            provider: ProviderSettings::default(),
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> EngineError {
    EngineError::InvalidConfig {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

fn check_fraction(field: &str, value: f64) -> Result<(), EngineError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(invalid(field, format!("{value} is outside [0, 1]")));
    }
    Ok(())
}

fn check_count(field: &str, value: u64) -> Result<(), EngineError> {
    if value < 1 {
        return Err(invalid(field, "must be at least 1"));
    }
    Ok(())
}

impl TournamentConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        check_fraction("ai_interaction_weight", self.ai_interaction_weight)?;
        check_fraction("glitch_probability", self.glitch_probability)?;
        check_fraction("strategy_flaw_probability", self.strategy_flaw_probability)?;
        check_count("quota_min_queries", self.quota_min_queries.into())?;
        check_count("recon_duration_secs", self.recon_duration_secs)?;
        check_count("puzzle_piece_count", self.puzzle_piece_count.into())?;
        check_count("max_entry_attempts", self.max_entry_attempts.into())?;
        check_count("simple_operator_limit", self.simple_operator_limit.into())?;
        if let Some(cap) = self.recon_query_cap {
            check_count("recon_query_cap", cap.into())?;
        }
        check_count("provider.max_length", self.provider.max_length.into())?;
        check_count("provider.timeout_secs", self.provider.timeout_secs)?;
        if self.quota_penalty_per_missing.is_negative() {
            return Err(invalid("quota_penalty_per_missing", "must not be negative"));
        }
        if self.rejected_claim_penalty.is_negative() {
            return Err(invalid("rejected_claim_penalty", "must not be negative"));
        }
        if self.passcode.trim().is_empty() {
            return Err(invalid("passcode", "must not be empty"));
        }
        let mut seen = BTreeSet::new();
        for problem in &self.problems {
            if problem.id.trim().is_empty() {
                return Err(invalid("problems", "problem ids must not be empty"));
            }
            if !seen.insert(problem.id.as_str()) {
                return Err(invalid("problems", format!("duplicate problem id {}", problem.id)));
            }
        }
        let round1 = self.problems_in(Round::R1).count() as u32;
        if round1 < self.puzzle_piece_count {
            return Err(invalid(
                "problems",
                format!(
                    "{round1} Round-1 problems cannot complete a {}-piece puzzle",
                    self.puzzle_piece_count
                ),
            ));
        }
        if self.problems_in(Round::R3).count() == 0 {
            return Err(invalid("problems", "at least one Round-3 problem is required"));
        }
        Ok(())
    }

    pub fn problem(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }

    pub fn problems_in(&self, round: Round) -> impl Iterator<Item = &Problem> {
        self.problems.iter().filter(move |p| p.round == round)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = TournamentConfig::default();
        config.validate().unwrap();
        assert_eq!(config.quota_min_queries, 15);
        assert_eq!(config.recon_duration_secs, 900);
        assert_eq!(config.ai_interaction_weight, 0.30);
        assert_eq!(config.quota_penalty_per_missing, Points::from_tenths(5));
    }

    #[test]
    fn out_of_range_fields_are_named() {
        let config = TournamentConfig {
            ai_interaction_weight: 1.5,
            ..Default::default()
        };
        match config.validate() {
            Err(EngineError::InvalidConfig { field, .. }) => assert_eq!(field, "ai_interaction_weight"),
            other => panic!("{other:?}"),
        }
        let config = TournamentConfig {
            glitch_probability: f64::NAN,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        let config = TournamentConfig {
            max_entry_attempts: 0,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        let config = TournamentConfig {
            puzzle_piece_count: 7,
            ..Default::default()
        };
        assert!(config.validate().is_err());
    }

    #[test]
    fn partial_documents_use_defaults() {
        let config: TournamentConfig = serde_json::from_str(r#"{"glitch_probability": 0.25}"#).unwrap();
        assert_eq!(config.glitch_probability, 0.25);
        assert_eq!(config.quota_min_queries, 15);
    }
}
