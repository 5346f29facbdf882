//! The unreliable assistant: classification, routing to truth or to a
//! controlled falsification, and the truth ledger.

mod flaw;
mod perturb;

use std::fmt;
use std::sync::LazyLock;

use battle_mathexpr::{Evaluator, Limits, Rational};
use rand::RngCore;
use regex::Regex;
use serde::{Deserialize, Serialize};

pub use flaw::{corrupt_plan, inject_flawed_plan, prepend_lemma, FlawedPlan, UnusablePlan};
pub use perturb::perturb_value;

use crate::error::EngineError;
use crate::model::{ClaimId, QueryId, ReconEntryId, Round, TeamId};
use crate::rng::bernoulli;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Advisor,
    Calculator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    FactLookup,
    StrategyRequest,
    SimpleArithmetic,
    MultiStepCalculation,
    Other,
}

impl Classification {
    pub fn allowed_in(self, mode: Mode) -> bool {
        match mode {
            Mode::Advisor => matches!(
                self,
                Classification::FactLookup | Classification::StrategyRequest | Classification::Other
            ),
            Mode::Calculator => matches!(
                self,
                Classification::SimpleArithmetic | Classification::MultiStepCalculation | Classification::Other
            ),
        }
    }

    /// Whether answering needs the external provider.
    pub fn needs_provider(self) -> bool {
        self != Classification::SimpleArithmetic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlawKind {
    None,
    FlawedPlan,
    SignFlip,
    FactorError,
    DigitPerturbation,
}

impl fmt::Display for FlawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One ledger entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: QueryId,
    pub team_id: TeamId,
    pub round: Round,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_id: Option<String>,
    pub query_text: String,
    pub classification: Classification,
    pub ground_truth: Option<String>,
    pub emitted_answer: String,
    pub falsified: bool,
    pub flaw_kind: FlawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flaw_detail: Option<String>,
    /// The uniform value that decided falsification, when one was drawn.
    pub rng_draw: Option<f64>,
    /// Every raw word consumed from the tournament rng for this query.
    pub rng_draws: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recon_entry_id: Option<ReconEntryId>,
    pub timestamp: u64,
}

impl QueryRecord {
    /// The ledger soundness condition for this record.
    pub fn is_sound(&self) -> bool {
        let flaw_consistent = self.falsified == (self.flaw_kind != FlawKind::None);
        let truth_consistent = match &self.ground_truth {
            Some(truth) => self.falsified == (&self.emitted_answer != truth),
            None => true,
        };
        flaw_consistent && truth_consistent && self.classification.allowed_in(self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClaimVerdict {
    Pending,
    Upheld,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeceptionClaim {
    pub id: ClaimId,
    pub team_id: TeamId,
    pub query_id: QueryId,
    pub explanation: String,
    pub verdict: ClaimVerdict,
    pub timestamp: u64,
}

/// Upheld iff the ledger marks the record falsified.
pub fn adjudicate_claim(record: &QueryRecord) -> ClaimVerdict {
    if record.falsified {
        ClaimVerdict::Upheld
    } else {
        ClaimVerdict::Rejected
    }
}

fn word_pattern(words: &[&str]) -> Regex {
    let alternation: Vec<String> = words.iter().map(|w| regex::escape(w)).collect();
    Regex::new(&format!(r"(?i)\b(?:{})\b", alternation.join("|"))).expect("keyword pattern")
}

static CALCULUS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:limits?|integrals?|integrate|derivatives?|differentiate|series)\b").expect("calculus pattern")
});
static DEFINITION: LazyLock<Regex> =
    LazyLock::new(|| word_pattern(&["what is", "what's", "state", "define", "definition of", "formula for", "theorem"]));
static PLANNING: LazyLock<Regex> =
    LazyLock::new(|| word_pattern(&["how do i solve", "how to solve", "strategy", "plan", "approach", "steps to"]));
static CALC_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:compute|calculate|evaluate|what\s+is)\s*:?\s*").expect("prefix pattern"));
static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?\d+(?:\.\d+)?(?:/\d+)?").expect("number pattern"));

/// Strips conversational wrapping around a bare expression, so
/// "compute 3+4 =" is read as "3+4".
pub fn expression_candidate(text: &str) -> &str {
    let mut rest = text.trim();
    if let Some(m) = CALC_PREFIX.find(rest) {
        rest = &rest[m.end()..];
    }
    rest.trim_end_matches(|c: char| c == '=' || c == '?' || c.is_whitespace())
}

/// Deterministic rule-based classification; the first matching rule wins.
pub fn classify_query(text: &str, mode: Mode, simple_operator_limit: u32) -> Result<Classification, EngineError> {
    if text.trim().is_empty() {
        return Err(EngineError::EmptyQuery);
    }
    match mode {
        Mode::Calculator => {
            if let Ok(expr) = battle_mathexpr::parse(expression_candidate(text)) {
                return Ok(if battle_mathexpr::operator_count(&expr) <= simple_operator_limit as usize {
                    Classification::SimpleArithmetic
                } else {
                    Classification::MultiStepCalculation
                });
            }
            if CALCULUS.is_match(text) {
                return Ok(Classification::MultiStepCalculation);
            }
        }
        Mode::Advisor => {
            if DEFINITION.is_match(text) {
                return Ok(Classification::FactLookup);
            }
            if PLANNING.is_match(text) {
                return Ok(Classification::StrategyRequest);
            }
        }
    }
    Ok(Classification::Other)
}

/// Knobs that shape how an answer is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Routing {
    pub glitch_probability: f64,
    pub strategy_flaw_probability: f64,
}

/// What the proxy decided for one query, before it is stamped into a record.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub ground_truth: Option<String>,
    pub emitted_answer: String,
    pub falsified: bool,
    pub flaw_kind: FlawKind,
    pub flaw_detail: Option<String>,
    pub rng_draw: Option<f64>,
}

impl Answer {
    fn truthful(text: String) -> Self {
        Answer {
            ground_truth: Some(text.clone()),
            emitted_answer: text,
            falsified: false,
            flaw_kind: FlawKind::None,
            flaw_detail: None,
            rng_draw: None,
        }
    }
}

/// Exact answer for a simple expression. Errors become the answer text,
/// since they are the true result of the request.
pub fn exact_answer(text: &str) -> String {
    let evaluator = Evaluator::new(Limits::default());
    match battle_mathexpr::parse(expression_candidate(text)) {
        Ok(expr) => match evaluator.evaluate(&expr) {
            Ok(value) => value.to_string(),
            Err(e) => format!("error: {e}"),
        },
        Err(e) => format!("error: {e}"),
    }
}

/// Produces the answer for a classified query. `provider_text` must be
/// present for every classification except `SimpleArithmetic`.
pub fn route(
    classification: Classification,
    query_text: &str,
    provider_text: Option<String>,
    routing: Routing,
    rng: &mut impl RngCore,
) -> Answer {
    match classification {
        Classification::SimpleArithmetic => Answer::truthful(exact_answer(query_text)),
        Classification::FactLookup | Classification::Other => {
            Answer::truthful(provider_text.expect("provider text for pass-through"))
        }
        Classification::StrategyRequest => {
            let plan = provider_text.expect("provider text for strategy");
            let (draw, flaw) = bernoulli(rng, routing.strategy_flaw_probability);
            if !flaw {
                return Answer {
                    rng_draw: Some(draw),
                    ..Answer::truthful(plan)
                };
            }
            let flawed = corrupt_plan(&plan, rng);
            Answer {
                ground_truth: Some(plan),
                emitted_answer: flawed.text,
                falsified: true,
                flaw_kind: FlawKind::FlawedPlan,
                flaw_detail: Some(flawed.detail),
                rng_draw: Some(draw),
            }
        }
        Classification::MultiStepCalculation => {
            let text = provider_text.expect("provider text for calculation");
            let Some((span, value)) = final_number(&text) else {
                return Answer::truthful(text);
            };
            let (draw, glitch) = bernoulli(rng, routing.glitch_probability);
            if !glitch {
                return Answer {
                    rng_draw: Some(draw),
                    ..Answer::truthful(text)
                };
            }
            let (wrong, kind) = perturb_value(&value, rng);
            let rendered = render_like(&text[span.clone()], &wrong);
            let emitted = format!("{}{}{}", &text[..span.start], rendered, &text[span.end..]);
            Answer {
                ground_truth: Some(text),
                emitted_answer: emitted,
                falsified: true,
                flaw_kind: kind,
                flaw_detail: Some(format!("final value {value} reported as {wrong}")),
                rng_draw: Some(draw),
            }
        }
    }
}

/// The last number in `text` that reads as a finite rational.
pub fn final_number(text: &str) -> Option<(std::ops::Range<usize>, Rational)> {
    NUMBER
        .find_iter(text)
        .filter_map(|m| m.as_str().parse::<Rational>().ok().map(|v| (m.range(), v)))
        .last()
}

/// Writes `value` in decimal when the original token was a decimal and the
/// value has a terminating expansion, otherwise in canonical `p/q` form.
fn render_like(original: &str, value: &Rational) -> String {
    if original.contains('.') {
        if let Some(decimal) = value.to_decimal_string() {
            return decimal;
        }
    }
    value.to_string()
}

/// What a team may see about one of its own queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamQueryView {
    pub id: QueryId,
    pub team_id: TeamId,
    pub round: Round,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem_id: Option<String>,
    pub query_text: String,
    pub emitted_answer: String,
    pub timestamp: u64,
}

impl From<&QueryRecord> for TeamQueryView {
    fn from(r: &QueryRecord) -> Self {
        TeamQueryView {
            id: r.id.clone(),
            team_id: r.team_id.clone(),
            round: r.round,
            mode: r.mode,
            problem_id: r.problem_id.clone(),
            query_text: r.query_text.clone(),
            emitted_answer: r.emitted_answer.clone(),
            timestamp: r.timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LedgerVariant {
    /// Emitted answers only, no truth metadata.
    Team,
    /// Full records including ground truth and falsification.
    Judge,
}

/// One JSON object per line.
pub fn export_ledger<'a>(records: impl IntoIterator<Item = &'a QueryRecord>, variant: LedgerVariant) -> String {
    let mut out = String::new();
    for record in records {
        let line = match variant {
            LedgerVariant::Judge => serde_json::to_string(record),
            LedgerVariant::Team => serde_json::to_string(&TeamQueryView::from(record)),
        }
        .expect("ledger record serializes");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
