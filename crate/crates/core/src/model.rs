//! Identifiers and the shared vocabulary of a match.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub const PREFIX: &'static str = $prefix;

            pub fn from_index(index: usize) -> Self {
                Self(format!("{}{}", $prefix, index))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(value: &str) -> Self {
                Self(value.to_owned())
            }
        }
    };
}

id_type!(TournamentId, "t");
id_type!(TeamId, "team-");
id_type!(SubmissionId, "sub-");
id_type!(
    /// Identifies one ledger entry.
    QueryId,
    "q-"
);
id_type!(ClaimId, "claim-");
id_type!(ScoreEventId, "ev-");
id_type!(ReconEntryId, "recon-");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Registration,
    Round1,
    Round2,
    Round3Recon,
    Round3Solve,
    Round3Presentation,
    Finished,
}

impl Phase {
    pub const ORDER: [Phase; 7] = [
        Phase::Registration,
        Phase::Round1,
        Phase::Round2,
        Phase::Round3Recon,
        Phase::Round3Solve,
        Phase::Round3Presentation,
        Phase::Finished,
    ];

    pub fn successor(self) -> Option<Phase> {
        let index = Self::ORDER.iter().position(|p| *p == self)?;
        Self::ORDER.get(index + 1).copied()
    }

    /// The round whose problems accept submissions in this phase.
    pub fn submission_round(self) -> Option<Round> {
        match self {
            Phase::Round1 => Some(Round::R1),
            Phase::Round2 => Some(Round::R2),
            Phase::Round3Solve => Some(Round::R3),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Round {
    R1,
    R2,
    R3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pending,
    Correct,
    Partial,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HintMark {
    UsedCorrectly,
    Misled,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryResult {
    Admitted,
    Rejected,
    LockedOut,
}

/// Who is performing an operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "role", content = "id")]
pub enum Actor {
    Admin,
    Judge(String),
    Team(TeamId),
    Spectator,
}

impl Actor {
    pub fn can_judge(&self) -> bool {
        matches!(self, Actor::Judge(_) | Actor::Admin)
    }

    pub fn sees_ledger_truth(&self) -> bool {
        self.can_judge()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Team {
    pub id: TeamId,
    pub name: String,
    pub puzzle_pieces: u32,
    pub entry_attempts_used: u32,
    pub round2_query_count: u32,
    pub recon_query_count: u32,
    pub active: bool,
    pub admitted: bool,
    pub awarded_problems: Vec<String>,
}

impl Team {
    pub fn new(id: TeamId, name: String) -> Self {
        Self {
            id,
            name,
            puzzle_pieces: 0,
            entry_attempts_used: 0,
            round2_query_count: 0,
            recon_query_count: 0,
            active: true,
            admitted: false,
            awarded_problems: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub id: SubmissionId,
    pub team_id: TeamId,
    pub problem_id: String,
    pub round: Round,
    pub payload: String,
    pub cited_hints: Vec<QueryId>,
    pub verdict: Verdict,
    pub hint_marks: BTreeMap<QueryId, HintMark>,
    pub judge: Option<String>,
    pub filed_at: u64,
    pub judged_at: Option<u64>,
}
