use std::sync::LazyLock;

use rand::RngCore;
use regex::Regex;
use thiserror::Error;

use crate::rng::pick;

/// Near-miss pairs: each term is swapped for its partner.
const CONFUSIONS: &[(&str, &str)] = &[
    ("necessary", "sufficient"),
    ("converse", "contrapositive"),
    ("mean value theorem", "intermediate value theorem"),
    ("at least", "at most"),
    ("maximum", "minimum"),
    ("increasing", "decreasing"),
    ("greater than", "less than"),
    ("numerator", "denominator"),
    ("injective", "surjective"),
    ("convergent", "divergent"),
    ("upper bound", "lower bound"),
    ("inscribed", "circumscribed"),
];

const FALSE_LEMMAS: &[&str] = &[
    "Lemma: a condition that is sufficient is always necessary as well.",
    "Lemma: a statement and its converse are logically equivalent.",
    "Lemma: every continuous function on an open interval attains a maximum.",
    "Lemma: if the terms of a series tend to zero, the series converges.",
    "Lemma: the square root of a sum equals the sum of the square roots.",
];

static CONDITION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(if|only if|provided|assum\w*|must|requir\w*|necessary|sufficient|condition\w*|ensure|check|non-?zero|positive|domain|unless)\b",
    )
    .expect("condition pattern")
});

static STEP_PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:step\s*)?\d+\s*[.):]\s*").expect("step prefix pattern"));

static CONFUSION: LazyLock<Regex> = LazyLock::new(|| {
    let mut terms: Vec<&str> = CONFUSIONS.iter().flat_map(|(a, b)| [*a, *b]).collect();
    terms.sort_by_key(|t| std::cmp::Reverse(t.len()));
    let alternation: Vec<String> = terms.iter().map(|t| regex::escape(t)).collect();
    Regex::new(&format!(r"(?i)\b(?:{})\b", alternation.join("|"))).expect("confusion pattern")
});

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("plan has {segments} segment(s); at least 2 are needed to corrupt it")]
pub struct UnusablePlan {
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlawedPlan {
    pub text: String,
    /// What was done to the plan, for judges.
    pub detail: String,
}

struct Segments {
    parts: Vec<String>,
    separator: &'static str,
}

impl Segments {
    fn split(text: &str) -> Self {
        let lines: Vec<String> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect();
        if lines.len() >= 2 {
            return Segments {
                parts: lines,
                separator: "\n",
            };
        }
        let mut parts = Vec::new();
        let mut current = String::new();
        let mut chars = text.trim().chars().peekable();
        while let Some(c) = chars.next() {
            current.push(c);
            if matches!(c, '.' | '!' | '?') && chars.peek().is_some_and(|n| n.is_whitespace()) {
                parts.push(current.trim().to_owned());
                current.clear();
            }
        }
        if !current.trim().is_empty() {
            parts.push(current.trim().to_owned());
        }
        Segments { parts, separator: " " }
    }

    fn join(&self) -> String {
        self.parts.join(self.separator)
    }
}

fn split_prefix(segment: &str) -> (&str, &str) {
    match STEP_PREFIX.find(segment) {
        Some(m) => segment.split_at(m.end()),
        None => ("", segment),
    }
}

fn partner(term: &str) -> String {
    let lower = term.to_lowercase();
    let replacement = CONFUSIONS
        .iter()
        .find_map(|(a, b)| {
            if *a == lower {
                Some(*b)
            } else if *b == lower {
                Some(*a)
            } else {
                None
            }
        })
        .expect("matched term is in the table");
    if term.chars().next().is_some_and(char::is_uppercase) {
        let mut chars = replacement.chars();
        let first = chars.next().expect("non-empty term");
        first.to_uppercase().chain(chars).collect()
    } else {
        replacement.to_owned()
    }
}

enum Corruption {
    Drop(usize),
    Swap(usize),
    Confuse { segment: usize, start: usize, end: usize },
}

/// Applies one corruption chosen by `rng` among those the plan admits:
/// dropping a step that states a condition, transposing two adjacent steps,
/// or swapping a term for its near-miss partner.
pub fn inject_flawed_plan(plan: &str, rng: &mut impl RngCore) -> Result<FlawedPlan, UnusablePlan> {
    let mut segments = Segments::split(plan);
    if segments.parts.len() < 2 {
        return Err(UnusablePlan {
            segments: segments.parts.len(),
        });
    }
    let mut options = Vec::new();
    for (i, part) in segments.parts.iter().enumerate() {
        if CONDITION.is_match(split_prefix(part).1) {
            options.push(Corruption::Drop(i));
        }
    }
    for i in 0..segments.parts.len() - 1 {
        if split_prefix(&segments.parts[i]).1 != split_prefix(&segments.parts[i + 1]).1 {
            options.push(Corruption::Swap(i));
        }
    }
    for (i, part) in segments.parts.iter().enumerate() {
        for m in CONFUSION.find_iter(part) {
            options.push(Corruption::Confuse {
                segment: i,
                start: m.start(),
                end: m.end(),
            });
        }
    }
    if options.is_empty() {
        // Identical steps with no conditions or table terms.
        return Ok(prepend_lemma(plan, rng));
    }
    let detail = match options.swap_remove(pick(rng, options.len())) {
        Corruption::Drop(i) => {
            segments.parts.remove(i);
            format!("dropped condition step {}", i + 1)
        }
        Corruption::Swap(i) => {
            let (pa, ba) = split_prefix(&segments.parts[i]);
            let (pb, bb) = split_prefix(&segments.parts[i + 1]);
            let first = format!("{pa}{bb}");
            let second = format!("{pb}{ba}");
            segments.parts[i] = first;
            segments.parts[i + 1] = second;
            format!("swapped steps {} and {}", i + 1, i + 2)
        }
        Corruption::Confuse { segment, start, end } => {
            let part = &segments.parts[segment];
            let term = &part[start..end];
            let replacement = partner(term);
            let detail = format!("replaced {term:?} with {replacement:?} in step {}", segment + 1);
            segments.parts[segment] = format!("{}{}{}", &part[..start], replacement, &part[end..]);
            detail
        }
    };
    let text = segments.join();
    if text == plan {
        return Ok(prepend_lemma(plan, rng));
    }
    Ok(FlawedPlan { text, detail })
}

/// Fallback for plans too short to corrupt in place.
pub fn prepend_lemma(plan: &str, rng: &mut impl RngCore) -> FlawedPlan {
    let lemma = FALSE_LEMMAS[pick(rng, FALSE_LEMMAS.len())];
    let plan = plan.trim();
    let text = if plan.is_empty() {
        lemma.to_owned()
    } else {
        format!("{lemma} {plan}")
    };
    FlawedPlan {
        text,
        detail: format!("prepended false lemma {lemma:?}"),
    }
}

/// `inject_flawed_plan` with the lemma fallback applied.
pub fn corrupt_plan(plan: &str, rng: &mut impl RngCore) -> FlawedPlan {
    inject_flawed_plan(plan, rng).unwrap_or_else(|_| prepend_lemma(plan, rng))
}
