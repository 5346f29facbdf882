//! How scripted teams treat assistant answers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BotPolicy {
    /// Cites every answer it receives and never files a claim.
    BlindTruster,
    /// Checks every answer against its own knowledge; mismatches are claimed
    /// and only confirmed answers are cited.
    Skeptic,
    /// Checks each answer with the given probability and trusts the rest.
    Mixed(f64),
}

/// What a bot does with one answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    Cite,
    Claim,
}

impl BotPolicy {
    /// Whether the next answer gets checked. Only `Mixed` consumes `rng`, one
    /// draw per answer.
    pub fn verifies(&self, rng: &mut impl Rng) -> bool {
        match *self {
            BotPolicy::BlindTruster => false,
            BotPolicy::Skeptic => true,
            BotPolicy::Mixed(p) => rng.random::<f64>() < p,
        }
    }

    pub fn react(&self, rng: &mut impl Rng, emitted: &str, knowledge: &str) -> Reaction {
        if self.verifies(rng) && emitted != knowledge {
            Reaction::Claim
        } else {
            Reaction::Cite
        }
    }
}

impl fmt::Display for BotPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BotPolicy::BlindTruster => f.write_str("blind"),
            BotPolicy::Skeptic => f.write_str("skeptic"),
            BotPolicy::Mixed(p) => write!(f, "mixed:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown bot policy {0:?}; expected blind, skeptic or mixed:<p>")]
pub struct ParsePolicyError(pub String);

impl FromStr for BotPolicy {
    type Err = ParsePolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "blind" | "blind-truster" | "blindtruster" => return Ok(BotPolicy::BlindTruster),
            "skeptic" => return Ok(BotPolicy::Skeptic),
            _ => {}
        }
        let p = s
            .strip_prefix("mixed:")
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|p| (0.0..=1.0).contains(p))
            .ok_or_else(|| ParsePolicyError(s.to_owned()))?;
        Ok(BotPolicy::Mixed(p))
    }
}

/// Parses a comma-separated policy list such as `skeptic,blind,mixed:0.5`.
pub fn parse_policies(list: &str) -> Result<Vec<BotPolicy>, ParsePolicyError> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}
