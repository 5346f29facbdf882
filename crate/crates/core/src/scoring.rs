//! Converts match outcomes into points.
//!
//! Every rule has a fixed delta:
//!
//! | rule                 | delta            |
//! |----------------------|------------------|
//! | `CorrectSolution`    | +5               |
//! | `PartialSolution`    | +2               |
//! | `DeceptionDetected`  | +2               |
//! | `FalseHintUsed`      | -1               |
//! | `CorrectHintUse`     | +0.5             |
//! | `QuotaPenalty`       | <= 0             |
//! | `Round3Presentation` | >= 0             |
//! | `RejectedClaim`      | < 0 (opt-in)     |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HintMark, ScoreEventId, TeamId, Verdict};
use crate::Points;

pub const CORRECT_SOLUTION: Points = Points::whole(5);
pub const PARTIAL_SOLUTION: Points = Points::whole(2);
pub const DECEPTION_DETECTED: Points = Points::whole(2);
pub const FALSE_HINT_USED: Points = Points::whole(-1);
pub const CORRECT_HINT_USE: Points = Points::from_tenths(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScoreRule {
    CorrectSolution,
    PartialSolution,
    DeceptionDetected,
    FalseHintUsed,
    CorrectHintUse,
    QuotaPenalty,
    Round3Presentation,
    RejectedClaim,
}

impl ScoreRule {
    pub const ALL: [ScoreRule; 8] = [
        ScoreRule::CorrectSolution,
        ScoreRule::PartialSolution,
        ScoreRule::DeceptionDetected,
        ScoreRule::FalseHintUsed,
        ScoreRule::CorrectHintUse,
        ScoreRule::QuotaPenalty,
        ScoreRule::Round3Presentation,
        ScoreRule::RejectedClaim,
    ];

    /// Whether `delta` is a legal amount for this rule.
    pub fn admits(self, delta: Points) -> bool {
        match self {
            ScoreRule::CorrectSolution => delta == CORRECT_SOLUTION,
            ScoreRule::PartialSolution => delta == PARTIAL_SOLUTION,
            ScoreRule::DeceptionDetected => delta == DECEPTION_DETECTED,
            ScoreRule::FalseHintUsed => delta == FALSE_HINT_USED,
            ScoreRule::CorrectHintUse => delta == CORRECT_HINT_USE,
            ScoreRule::QuotaPenalty => delta <= Points::ZERO,
            ScoreRule::Round3Presentation => delta >= Points::ZERO,
            ScoreRule::RejectedClaim => delta < Points::ZERO,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            ScoreRule::CorrectSolution => "correct_solution",
            ScoreRule::PartialSolution => "partial_solution",
            ScoreRule::DeceptionDetected => "deception_detected",
            ScoreRule::FalseHintUsed => "false_hint_used",
            ScoreRule::CorrectHintUse => "correct_hint_use",
            ScoreRule::QuotaPenalty => "quota_penalty",
            ScoreRule::Round3Presentation => "round3_presentation",
            ScoreRule::RejectedClaim => "rejected_claim",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreEvent {
    pub id: ScoreEventId,
    pub team_id: TeamId,
    pub rule: ScoreRule,
    pub delta: Points,
    /// Submission, query, claim or team that caused the event.
    pub source_ref: String,
    pub timestamp: u64,
}

/// A rule together with its delta, before it is attached to a team.
pub type Award = (ScoreRule, Points);

pub fn score_solution(verdict: Verdict) -> Option<Award> {
    match verdict {
        Verdict::Correct => Some((ScoreRule::CorrectSolution, CORRECT_SOLUTION)),
        Verdict::Partial => Some((ScoreRule::PartialSolution, PARTIAL_SOLUTION)),
        Verdict::Incorrect | Verdict::Pending => None,
    }
}

/// Upheld claims earn the deception bonus; rejected claims cost
/// `rejected_penalty` when it is non-zero.
pub fn score_deception_claim(upheld: bool, rejected_penalty: Points) -> Option<Award> {
    if upheld {
        Some((ScoreRule::DeceptionDetected, DECEPTION_DETECTED))
    } else if rejected_penalty > Points::ZERO {
        Some((ScoreRule::RejectedClaim, -rejected_penalty))
    } else {
        None
    }
}

/// A `Misled` mark only costs a point when the hint really was falsified;
/// otherwise the mistake was the team's own.
pub fn score_hint_use(mark: HintMark, ledger_falsified: bool) -> Option<Award> {
    match mark {
        HintMark::Misled if ledger_falsified => Some((ScoreRule::FalseHintUsed, FALSE_HINT_USED)),
        HintMark::UsedCorrectly => Some((ScoreRule::CorrectHintUse, CORRECT_HINT_USE)),
        HintMark::Misled | HintMark::Neutral => None,
    }
}

pub fn apply_quota_penalty(query_count: u32, quota_min: u32, penalty_per_missing: Points) -> Option<Points> {
    if query_count >= quota_min {
        return None;
    }
    let missing = i64::from(quota_min - query_count);
    Some(-(penalty_per_missing * missing))
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{name} = {value} is outside [{min}, {max}]")]
pub struct OutOfRange {
    pub name: &'static str,
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

fn check_range(name: &'static str, value: f64, max: f64) -> Result<(), OutOfRange> {
    if (0.0..=max).contains(&value) {
        Ok(())
    } else {
        Err(OutOfRange {
            name,
            value,
            min: 0.0,
            max,
        })
    }
}

/// Weighted Round-3 total `(1 - weight) * solution + weight * interaction`,
/// both scores on a 0..=100 scale, rounded to the nearest tenth.
pub fn round3_total(solution_score: f64, interaction_score: f64, weight: f64) -> Result<Points, OutOfRange> {
    check_range("solution_score", solution_score, 100.0)?;
    check_range("interaction_score", interaction_score, 100.0)?;
    check_range("weight", weight, 1.0)?;
    // Work in tenths so exact inputs stay exact.
    let tenths = (1.0 - weight) * solution_score * 10.0 + weight * interaction_score * 10.0;
    Ok(Points::from_tenths(tenths.round() as i64))
}

/// Maps raw Round-3 solution points linearly onto 0..=100.
pub fn normalize_round3_solution(raw: Points, max_attainable: Points) -> f64 {
    if max_attainable <= Points::ZERO {
        return 0.0;
    }
    let clamped = raw.tenths().clamp(0, max_attainable.tenths());
    clamped as f64 * 100.0 / max_attainable.tenths() as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamScore {
    pub team_id: TeamId,
    pub name: String,
    pub total: Points,
    pub tallies: BTreeMap<ScoreRule, u32>,
}

/// Per-team totals and rule tallies, in team registration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Scoreboard {
    pub teams: Vec<TeamScore>,
}

impl Scoreboard {
    /// Folds `events` over the given teams. Events for unknown teams are
    /// ignored.
    pub fn build<'a>(
        teams: impl IntoIterator<Item = (&'a TeamId, &'a str)>,
        events: impl IntoIterator<Item = &'a ScoreEvent>,
    ) -> Self {
        let mut board = Scoreboard {
            teams: teams
                .into_iter()
                .map(|(id, name)| TeamScore {
                    team_id: id.clone(),
                    name: name.to_owned(),
                    total: Points::ZERO,
                    tallies: BTreeMap::new(),
                })
                .collect(),
        };
        for event in events {
            if let Some(row) = board.teams.iter_mut().find(|t| t.team_id == event.team_id) {
                row.total += event.delta;
                *row.tallies.entry(event.rule).or_insert(0) += 1;
            }
        }
        board
    }

    pub fn total(&self, team: &TeamId) -> Option<Points> {
        self.teams.iter().find(|t| &t.team_id == team).map(|t| t.total)
    }

    pub fn by_name(&self, name: &str) -> Option<&TeamScore> {
        self.teams.iter().find(|t| t.name == name)
    }

    /// CSV with a header row: `team,total` followed by one tally column per
    /// rule.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("team,total");
        for rule in ScoreRule::ALL {
            out.push(',');
            out.push_str(rule.column());
        }
        out.push('\n');
        for row in &self.teams {
            let _ = write!(out, "{},{}", csv_field(&row.name), row.total);
            for rule in ScoreRule::ALL {
                let _ = write!(out, ",{}", row.tallies.get(&rule).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_schedule() {
        assert_eq!(score_solution(Verdict::Correct), Some((ScoreRule::CorrectSolution, Points::whole(5))));
        assert_eq!(score_solution(Verdict::Partial), Some((ScoreRule::PartialSolution, Points::whole(2))));
        assert_eq!(score_solution(Verdict::Incorrect), None);
    }

    #[test]
    fn deception_claims() {
        assert_eq!(
            score_deception_claim(true, Points::ZERO),
            Some((ScoreRule::DeceptionDetected, Points::whole(2)))
        );
        assert_eq!(score_deception_claim(false, Points::ZERO), None);
        assert_eq!(
            score_deception_claim(false, Points::from_tenths(5)),
            Some((ScoreRule::RejectedClaim, Points::from_tenths(-5)))
        );
    }

    #[test]
    fn hint_use() {
        assert_eq!(
            score_hint_use(HintMark::Misled, true),
            Some((ScoreRule::FalseHintUsed, Points::whole(-1)))
        );
        assert_eq!(
            score_hint_use(HintMark::UsedCorrectly, true),
            Some((ScoreRule::CorrectHintUse, Points::from_tenths(5)))
        );
        assert_eq!(score_hint_use(HintMark::Neutral, true), None);
        assert_eq!(score_hint_use(HintMark::Neutral, false), None);
        assert_eq!(score_hint_use(HintMark::Misled, false), None);
    }

    #[test]
    fn quota_penalty_values() {
        let half = Points::from_tenths(5);
        assert_eq!(apply_quota_penalty(15, 15, half), None);
        assert_eq!(apply_quota_penalty(20, 15, half), None);
        assert_eq!(apply_quota_penalty(10, 15, half), Some(Points::from_tenths(-25)));
        assert_eq!(apply_quota_penalty(0, 15, half), Some(Points::from_tenths(-75)));
    }

    #[test]
    fn round3_weighting() {
        assert_eq!(round3_total(100.0, 0.0, 0.30).unwrap(), Points::whole(70));
        assert_eq!(round3_total(0.0, 100.0, 0.30).unwrap(), Points::whole(30));
        assert_eq!(round3_total(50.0, 80.0, 0.30).unwrap(), Points::whole(59));
        assert_eq!(round3_total(42.0, 42.0, 0.77).unwrap(), Points::whole(42));
        assert!(round3_total(101.0, 0.0, 0.3).is_err());
        assert!(round3_total(50.0, -1.0, 0.3).is_err());
        assert!(round3_total(50.0, 50.0, 1.1).is_err());
        assert!(round3_total(f64::NAN, 50.0, 0.3).is_err());
    }

    #[test]
    fn normalization_is_linear() {
        assert_eq!(normalize_round3_solution(Points::whole(5), Points::whole(10)), 50.0);
        assert_eq!(normalize_round3_solution(Points::whole(10), Points::whole(10)), 100.0);
        assert_eq!(normalize_round3_solution(Points::ZERO, Points::ZERO), 0.0);
    }

    fn event(team: &str, rule: ScoreRule, tenths: i64) -> ScoreEvent {
        ScoreEvent {
            id: ScoreEventId::from_index(0),
            team_id: TeamId::from(team),
            rule,
            delta: Points::from_tenths(tenths),
            source_ref: String::new(),
            timestamp: 0,
        }
    }

    #[test]
    fn scoreboard_sums_and_exports() {
        let teams = [(TeamId::from("a"), "Alpha".to_string()), (TeamId::from("b"), "Beta, Inc".to_string())];
        let empty = Scoreboard::build(teams.iter().map(|(i, n)| (i, n.as_str())), []);
        assert!(empty.teams.iter().all(|t| t.total == Points::ZERO));

        let events = [
            event("a", ScoreRule::CorrectSolution, 50),
            event("a", ScoreRule::FalseHintUsed, -10),
            event("a", ScoreRule::CorrectHintUse, 5),
        ];
        let board = Scoreboard::build(teams.iter().map(|(i, n)| (i, n.as_str())), &events);
        assert_eq!(board.total(&TeamId::from("a")), Some(Points::from_tenths(45)));
        let csv = board.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "team,total,correct_solution,partial_solution,deception_detected,false_hint_used,correct_hint_use,quota_penalty,round3_presentation,rejected_claim"
        );
        assert_eq!(lines.next().unwrap(), "Alpha,4.5,1,0,0,1,1,0,0,0");
        assert_eq!(lines.next().unwrap(), "\"Beta, Inc\",0.0,0,0,0,0,0,0,0,0");
    }
}
