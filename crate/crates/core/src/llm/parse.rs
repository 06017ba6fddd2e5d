use std::sync::LazyLock;

use regex::Regex;

use crate::prediction::PredictionSet;
use crate::taxonomy::{LabelVector, ValueLabel};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("could not interpret completion: {reason}")]
pub struct ParseError {
    pub reason: &'static str,
    /// The completion, verbatim.
    pub completion: String,
}

static NEGATIVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bnot\s+moral\b|\bnon[-\s]?moral\b").unwrap());

static MEMBER: LazyLock<Regex> = LazyLock::new(|| {
    let names: Vec<String> = ValueLabel::ALL
        .iter()
        .map(|l| l.name().to_lowercase())
        .collect();
    Regex::new(&format!(r"(?i)\b({})\b", names.join("|"))).unwrap()
});

/// Interprets a completion of the two-stage prompt.
///
/// A negative answer ("not moral", "non-moral") that comes before any dyad
/// mention gives Non-moral. Otherwise every dyad named, directly or through
/// either of its members, is set. Anything else is a [`ParseError`].
pub fn parse_response(completion: &str) -> Result<PredictionSet, ParseError> {
    let err = |reason| ParseError {
        reason,
        completion: completion.to_string(),
    };
    if completion.trim().is_empty() {
        return Err(err("empty completion"));
    }
    let first_member = MEMBER.find(completion).map(|m| m.start());
    let first_negative = NEGATIVE.find(completion).map(|m| m.start());

    if let Some(neg) = first_negative {
        if first_member.is_none_or(|m| neg < m) {
            return Ok(PredictionSet::non_moral());
        }
    }

    let labels: LabelVector = MEMBER
        .find_iter(completion)
        .filter_map(|m| {
            let word = m.as_str().to_lowercase();
            ValueLabel::ALL
                .into_iter()
                .find(|l| l.name().eq_ignore_ascii_case(&word))
        })
        .map(ValueLabel::dimension)
        .collect();

    if labels.is_empty() {
        Err(err("no moral dimension found"))
    } else {
        Ok(PredictionSet::new(labels))
    }
}
