//! Seeded scripts for simulated matches and the cassette that answers them.

use std::collections::BTreeMap;

use battle_core::ai_proxy::{exact_answer, Mode};
use battle_core::model::{Round, Verdict};
use battle_core::TournamentConfig;
use battle_llm::Cassette;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bots::BotPolicy;

/// Kinds of scripted assistant requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Advisor request for a multi-step plan.
    Strategy,
    /// Calculator request whose answer ends in a number.
    Integral,
    /// Advisor request for a stated fact.
    Fact,
    /// Calculator request for a short expression.
    Arithmetic,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Strategy, Family::Integral, Family::Fact, Family::Arithmetic];

    pub fn mode(self) -> Mode {
        match self {
            Family::Strategy | Family::Fact => Mode::Advisor,
            Family::Integral | Family::Arithmetic => Mode::Calculator,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedQuery {
    pub family: Family,
    pub mode: Mode,
    pub text: String,
    /// The true answer, which a verifying bot compares against.
    pub knowledge: String,
    /// Random tag embedded in the provider response, if one is involved.
    pub marker: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedSubmission {
    pub problem_id: String,
    pub payload: String,
    /// Verdict the scripted judge hands down.
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BotScript {
    pub name: String,
    pub policy: BotPolicy,
    /// Simulated milliseconds that pass before each of this bot's actions.
    pub think_ms: u64,
    pub round1: Vec<ScriptedSubmission>,
    pub duel: Vec<ScriptedQuery>,
    pub round2: Vec<ScriptedSubmission>,
    pub recon: Vec<ScriptedQuery>,
    pub round3: Vec<ScriptedSubmission>,
    pub interaction_score: f64,
}

impl BotScript {
    pub fn markers(&self) -> impl Iterator<Item = &str> {
        self.duel.iter().chain(&self.recon).filter_map(|q| q.marker.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOptions {
    pub duel_queries: usize,
    pub recon_queries: usize,
    /// Families cycled through, in order, for duel queries.
    pub families: Vec<Family>,
    /// Gives every bot the same duel queries, submissions, timing and
    /// interaction score; only policies and recon prompts differ.
    pub shared_script: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            duel_queries: 16,
            recon_queries: 3,
            families: Family::ALL.to_vec(),
            shared_script: false,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
#[error("script error: {0}")]
pub struct ScriptError(pub String);

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: TournamentConfig,
    pub seed: u64,
    pub bots: Vec<BotScript>,
    pub cassette: Cassette,
}

const CONCEPTS: &[&str] = &[
    "a group",
    "a ring",
    "a field",
    "a module",
    "an ideal",
    "a lattice",
    "a metric space",
    "a topology",
    "a vector space",
    "a matroid",
];

const R2_VERDICTS: [Verdict; 3] = [Verdict::Correct, Verdict::Partial, Verdict::Incorrect];
const R3_VERDICTS: [Verdict; 2] = [Verdict::Correct, Verdict::Partial];

fn marker(rng: &mut ChaCha8Rng) -> String {
    format!("mk-{:016x}", rng.random::<u64>())
}

struct Builder {
    rng: ChaCha8Rng,
    cassette: BTreeMap<String, String>,
}

impl Builder {
    fn provider_query(&mut self, family: Family, text: String, body: String) -> ScriptedQuery {
        let tag = marker(&mut self.rng);
        let response = if family == Family::Strategy {
            format!("{tag}\n{body}")
        } else {
            format!("{tag} {body}")
        };
        self.cassette.insert(text.clone(), response.clone());
        ScriptedQuery {
            family,
            mode: family.mode(),
            text,
            knowledge: response,
            marker: Some(tag),
        }
    }

    fn duel_query(&mut self, family: Family, case: &str) -> ScriptedQuery {
        let a: u32 = self.rng.random_range(1..10);
        let b: u32 = self.rng.random_range(1..7);
        match family {
            Family::Strategy => {
                let c = a * b * b;
                let text = format!("what strategy solves {a}x^2 - {c} > 0 in case {case}?");
                let body = format!(
                    "1. Move every term of {a}x^2 - {c} > 0 to the left side.\n\
                     2. Check that the leading coefficient {a} is positive.\n\
                     3. Factor the left side as {a}(x - {b})(x + {b}).\n\
                     4. Test the sign of each factor on every interval."
                );
                self.provider_query(family, text, body)
            }
            Family::Integral => {
                let value = battle_mathexpr::eval_str(&format!("{a}*{b}^3/3")).expect("integral value");
                let text = format!("compute the integral of {a}x^2 from 0 to {b} in case {case}");
                let body = format!("The antiderivative of {a}x^2 is {a}x^3/3, so the value is {value}");
                self.provider_query(family, text, body)
            }
            Family::Fact => {
                let r = a + b;
                let text = format!("state the area of a circle of radius {r} in case {case}");
                let body = format!("The area is pi times {r} squared, that is {} pi.", r * r);
                self.provider_query(family, text, body)
            }
            Family::Arithmetic => {
                let (x, y, z) = (
                    self.rng.random_range(1..1000u32),
                    self.rng.random_range(1..1000u32),
                    self.rng.random_range(1..1000u32),
                );
                let text = format!("({x} + {y}) / {z} - {a}");
                let knowledge = exact_answer(&text);
                ScriptedQuery {
                    family,
                    mode: family.mode(),
                    text,
                    knowledge,
                    marker: None,
                }
            }
        }
    }

    fn duel_queries(&mut self, options: &ScenarioOptions, tag: &str) -> Vec<ScriptedQuery> {
        (0..options.duel_queries)
            .map(|i| {
                let family = options.families[i % options.families.len()];
                self.duel_query(family, &format!("{tag}-{i}"))
            })
            .collect()
    }

    fn recon_queries(&mut self, options: &ScenarioOptions, team: &str) -> Vec<ScriptedQuery> {
        (0..options.recon_queries)
            .map(|k| {
                let concept = CONCEPTS[self.rng.random_range(0..CONCEPTS.len())];
                let text = format!("define {concept} for team {team} item {k}");
                let body = format!("{concept} is a standard structure; see any algebra text for {team}.");
                self.provider_query(Family::Fact, text, body)
            })
            .collect()
    }
}

fn submissions(problems: &[&str], verdicts: &[Verdict], round: &str) -> Vec<ScriptedSubmission> {
    problems
        .iter()
        .zip(verdicts.iter().cycle())
        .map(|(problem, verdict)| ScriptedSubmission {
            problem_id: (*problem).to_owned(),
            payload: format!("{round} solution for {problem}"),
            verdict: *verdict,
        })
        .collect()
}

impl Scenario {
    /// Builds one script per policy. The tournament seed is set to `seed`.
    pub fn generate(
        config: &TournamentConfig,
        policies: &[BotPolicy],
        seed: u64,
        options: &ScenarioOptions,
    ) -> Result<Scenario, ScriptError> {
        if policies.len() < 2 {
            return Err(ScriptError(format!("a match needs at least 2 bots, got {}", policies.len())));
        }
        if options.families.is_empty() {
            return Err(ScriptError("no query families selected".into()));
        }
        let mut config = config.clone();
        config.rng_seed = seed;
        config
            .validate()
            .map_err(|e| ScriptError(format!("configuration rejected: {e}")))?;
        let ids = |round| config.problems_in(round).map(|p| p.id.as_str()).collect::<Vec<_>>();
        let round1: Vec<&str> = ids(Round::R1)
            .into_iter()
            .take(config.puzzle_piece_count as usize)
            .collect();
        let (round2, round3) = (ids(Round::R2), ids(Round::R3));

        let mut builder = Builder {
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5c1e_7a90_0000_0001),
            cassette: BTreeMap::new(),
        };
        let shared = options.shared_script.then(|| {
            (
                builder.duel_queries(options, "s"),
                builder.rng.random_range(200..2000u64),
                f64::from(builder.rng.random_range(0..=100u32)),
            )
        });
        let mut bots = Vec::new();
        for (index, policy) in policies.iter().enumerate() {
            let name = format!("bot-{}", index + 1);
            let (duel, think_ms, interaction_score) = match &shared {
                Some(script) => script.clone(),
                None => (
                    builder.duel_queries(options, &format!("b{}", index + 1)),
                    builder.rng.random_range(200..2000u64),
                    f64::from(builder.rng.random_range(0..=100u32)),
                ),
            };
            let recon = builder.recon_queries(options, &name);
            bots.push(BotScript {
                policy: *policy,
                think_ms,
                round1: submissions(&round1, &[Verdict::Correct], "R1"),
                duel,
                round2: submissions(&round2, &R2_VERDICTS, "R2"),
                recon,
                round3: submissions(&round3, &R3_VERDICTS, "R3"),
                interaction_score,
                name,
            });
        }
        let window_ms = config.recon_duration_secs * 1000;
        let recon_ms: u64 = bots.iter().map(|b| b.think_ms * b.recon.len() as u64).sum();
        if recon_ms >= window_ms {
            return Err(ScriptError(format!(
                "recon prompts need {recon_ms} ms but the window lasts {window_ms} ms"
            )));
        }
        Ok(Scenario {
            config,
            seed,
            bots,
            cassette: builder.cassette.iter().collect(),
        })
    }

    /// Every prompt the scripts send to the provider, with its response.
    pub fn cassette_entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.bots
            .iter()
            .flat_map(|b| b.duel.iter().chain(&b.recon))
            .filter(|q| q.marker.is_some())
            .map(|q| (q.text.as_str(), q.knowledge.as_str()))
    }
}
