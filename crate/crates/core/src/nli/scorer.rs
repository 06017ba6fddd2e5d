//! NLI scorer adapters.
//!
//! Contract: given equal-length premise and hypothesis lists, return one
//! [`ScoreTriple`] per pair, in order.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ScoreTriple;
use crate::jsonl::{self, RecordError};
use crate::taxonomy::ValueLabel;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}{}", index.map(|i| format!(" (pair {i})")).unwrap_or_default())]
pub struct ScorerError {
    /// Index of the failing pair, when known.
    pub index: Option<usize>,
    pub message: String,
}

impl ScorerError {
    pub fn new(message: impl Into<String>) -> Self {
        ScorerError {
            index: None,
            message: message.into(),
        }
    }

    pub fn at(index: usize, message: impl Into<String>) -> Self {
        ScorerError {
            index: Some(index),
            message: message.into(),
        }
    }
}

/// A thread-safe NLI model.
pub trait NliScorer: Send + Sync {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError>;

    /// Longest premise, in characters, the model accepts.
    fn max_premise_chars(&self) -> Option<usize> {
        None
    }
}

/// A scorer that needs exclusive access; wrap it in [`Exclusive`].
pub trait NliScorerMut: Send {
    fn score_mut(
        &mut self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError>;
}

/// Serializes calls to a non-thread-safe scorer.
pub struct Exclusive<S>(Mutex<S>);

impl<S: NliScorerMut> Exclusive<S> {
    pub fn new(inner: S) -> Self {
        Exclusive(Mutex::new(inner))
    }

    pub fn into_inner(self) -> S {
        self.0.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}

impl<S: NliScorerMut> NliScorer for Exclusive<S> {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        let mut guard = self
            .0
            .lock()
            .map_err(|_| ScorerError::new("scorer poisoned by an earlier panic"))?;
        guard.score_mut(premises, hypotheses)
    }
}

fn check_lengths(premises: &[&str], hypotheses: &[&str]) -> Result<(), ScorerError> {
    if premises.len() != hypotheses.len() {
        return Err(ScorerError::new(format!(
            "{} premises but {} hypotheses",
            premises.len(),
            hypotheses.len()
        )));
    }
    Ok(())
}

/// Adapts a per-pair function.
pub struct FnScorer<F>(F);

impl<F> FnScorer<F>
where
    F: Fn(&str, &str) -> Result<ScoreTriple, String> + Send + Sync,
{
    pub fn new(f: F) -> Self {
        FnScorer(f)
    }
}

impl<F> NliScorer for FnScorer<F>
where
    F: Fn(&str, &str) -> Result<ScoreTriple, String> + Send + Sync,
{
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        check_lengths(premises, hypotheses)?;
        premises
            .iter()
            .zip(hypotheses)
            .enumerate()
            .map(|(i, (p, h))| (self.0)(p, h).map_err(|m| ScorerError::at(i, m)))
            .collect()
    }
}

/// Offline stand-in for an NLI model: keyword cues per value label.
///
/// A hypothesis is entailed when the premise contains a word starting with
/// one of its label's cue stems. Deterministic, so it doubles as the stub
/// scorer for reproducibility checks.
#[derive(Debug, Clone)]
pub struct LexiconScorer {
    cues: HashMap<String, Vec<&'static str>>,
}

const CUES: [(ValueLabel, &[&str]); 10] = [
    (
        ValueLabel::Care,
        &[
            "care",
            "protect",
            "kind",
            "compassion",
            "help",
            "safe",
            "nurtur",
            "gentle",
        ],
    ),
    (
        ValueLabel::Harm,
        &[
            "harm", "hurt", "kill", "abus", "cruel", "violen", "suffer", "attack",
        ],
    ),
    (
        ValueLabel::Fairness,
        &["fair", "equal", "justice", "rights", "honest", "deserv"],
    ),
    (
        ValueLabel::Cheating,
        &[
            "cheat", "fraud", "steal", "unfair", "rigged", "scam", "lying",
        ],
    ),
    (
        ValueLabel::Loyalty,
        &[
            "loyal",
            "team",
            "family",
            "nation",
            "solidarity",
            "patriot",
            "ally",
        ],
    ),
    (
        ValueLabel::Betrayal,
        &[
            "betray", "traitor", "treason", "disloyal", "abandon", "desert",
        ],
    ),
    (
        ValueLabel::Authority,
        &[
            "authorit",
            "law",
            "obey",
            "respect",
            "tradition",
            "leader",
            "police",
        ],
    ),
    (
        ValueLabel::Subversion,
        &[
            "rebel", "defy", "disobe", "riot", "chaos", "subver", "anarch",
        ],
    ),
    (
        ValueLabel::Purity,
        &[
            "pure", "purity", "sacred", "holy", "clean", "god", "church", "chast",
        ],
    ),
    (
        ValueLabel::Degradation,
        &[
            "disgust", "gross", "filth", "dirty", "sin", "degrad", "obscen",
        ],
    ),
];

impl Default for LexiconScorer {
    fn default() -> Self {
        let mut cues = HashMap::new();
        for casing in [
            super::HypothesisCasing::Lower,
            super::HypothesisCasing::AsIs,
        ] {
            for (label, stems) in CUES {
                cues.insert(super::build_hypothesis_with(label, casing), stems.to_vec());
            }
        }
        LexiconScorer { cues }
    }
}

impl LexiconScorer {
    fn triple(&self, premise: &str, hypothesis: &str) -> Result<ScoreTriple, String> {
        let stems = self
            .cues
            .get(hypothesis)
            .ok_or_else(|| format!("no cues for hypothesis `{hypothesis}`"))?;
        let hits = premise
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .filter(|w| stems.iter().any(|s| w.starts_with(s)))
            .count();
        let (e, n) = match hits {
            0 => (0.05, 0.80),
            1 => (0.60, 0.25),
            2 => (0.75, 0.15),
            _ => (0.85, 0.10),
        };
        ScoreTriple::new(e, n, 1.0 - e - n).map_err(|err| err.to_string())
    }
}

impl NliScorer for LexiconScorer {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        check_lengths(premises, hypotheses)?;
        premises
            .iter()
            .zip(hypotheses)
            .enumerate()
            .map(|(i, (p, h))| self.triple(p, h).map_err(|m| ScorerError::at(i, m)))
            .collect()
    }
}

/// One precomputed score in a score-table file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTableEntry {
    pub premise: String,
    pub hypothesis: String,
    pub entailment: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

/// Scores looked up from a file produced offline by an external NLI model.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    entries: HashMap<(String, String), ScoreTriple>,
}

impl ScoreTable {
    pub fn from_entries<I: IntoIterator<Item = ScoreTableEntry>>(
        entries: I,
    ) -> Result<Self, ScorerError> {
        let mut table = ScoreTable::default();
        for (i, e) in entries.into_iter().enumerate() {
            let triple = ScoreTriple::new(e.entailment, e.neutral, e.contradiction)
                .map_err(|err| ScorerError::at(i, err.to_string()))?;
            table.entries.insert((e.premise, e.hypothesis), triple);
        }
        Ok(table)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, ScorerError> {
        let entries: Vec<ScoreTableEntry> = jsonl::read_records(reader).map_err(|e| match e {
            RecordError::Parse { line, source } => {
                ScorerError::new(format!("score table line {line}: {source}"))
            }
            RecordError::Io(e) => ScorerError::new(e.to_string()),
        })?;
        Self::from_entries(entries)
    }

    pub fn open(path: &Path) -> Result<Self, ScorerError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ScorerError::new(format!("{}: {e}", path.display())))?;
        Self::read(file)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl NliScorer for ScoreTable {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        check_lengths(premises, hypotheses)?;
        premises
            .iter()
            .zip(hypotheses)
            .enumerate()
            .map(|(i, (p, h))| {
                self.entries
                    .get(&(p.to_string(), h.to_string()))
                    .copied()
                    .ok_or_else(|| ScorerError::at(i, format!("no score for hypothesis `{h}`")))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    premises: &'a [&'a str],
    hypotheses: &'a [&'a str],
}

#[derive(Deserialize)]
struct HttpResponse {
    /// (entailment, neutral, contradiction) probabilities per pair.
    scores: Vec<[f64; 3]>,
}

/// Remote inference endpoint.
///
/// POSTs `{"premises": [...], "hypotheses": [...]}` and expects
/// `{"scores": [[entailment, neutral, contradiction], ...]}`.
pub struct HttpScorer {
    url: String,
    agent: ureq::Agent,
    max_premise_chars: Option<usize>,
}

impl HttpScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpScorer {
            url: url.into(),
            agent,
            max_premise_chars: None,
        }
    }

    pub fn with_max_premise_chars(mut self, limit: usize) -> Self {
        self.max_premise_chars = Some(limit);
        self
    }
}

impl NliScorer for HttpScorer {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        check_lengths(premises, hypotheses)?;
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(HttpRequest {
                premises,
                hypotheses,
            })
            .map_err(|e| ScorerError::new(format!("request to {} failed: {e}", self.url)))?;
        if !response.status().is_success() {
            return Err(ScorerError::new(format!(
                "{} returned HTTP {}",
                self.url,
                response.status()
            )));
        }
        let body: HttpResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ScorerError::new(format!("bad response body: {e}")))?;
        body.scores
            .into_iter()
            .enumerate()
            .map(|(i, [e, n, c])| {
                ScoreTriple::new(e, n, c).map_err(|err| ScorerError::at(i, err.to_string()))
            })
            .collect()
    }

    fn max_premise_chars(&self) -> Option<usize> {
        self.max_premise_chars
    }
}
