//! Zero-shot moral-value detection with a natural language inference model.
//!
//! The comment is the premise. Each of the ten value labels becomes a
//! hypothesis, "This text conveys the moral values of <label>.". The NLI model
//! returns entailment, neutral and contradiction probabilities for each pair;
//! entailment is normalized against neutrality only (`e / (e + n)`), since the
//! opposite polarity of every dyad is already scored as its own hypothesis. A
//! label is selected when its normalized score reaches the threshold (0.5,
//! inclusive). Selected labels collapse onto their dyads. When nothing is
//! selected the text is Non-moral.

mod scorer;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prediction::{LabelScores, PredictionSet};
use crate::taxonomy::{LabelVector, ValueLabel};

pub use scorer::{
    Exclusive, FnScorer, HttpScorer, LexiconScorer, NliScorer, NliScorerMut, ScoreTable,
    ScoreTableEntry, ScorerError,
};

/// Tolerance on the sum of the three probabilities.
pub const SCORE_SUM_TOLERANCE: f64 = 1e-4;

const HYPOTHESIS_PREFIX: &str = "This text conveys the moral values of ";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NliError {
    #[error("scorer failed at pair {pair_index}: {message}")]
    Scorer { pair_index: usize, message: String },
    #[error("invalid score triple at pair {pair_index}: {reason}")]
    InvalidScore { pair_index: usize, reason: String },
    #[error("scorer returned {got} triples for {expected} pairs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("entailment + neutral is zero{}", label.map(|l| format!(" for {l}")).unwrap_or_default())]
    DegenerateScore { label: Option<ValueLabel> },
    #[error("empty premise")]
    EmptyPremise,
    #[error("invalid score triple: {0}")]
    Triple(String),
}

/// Entailment, neutral and contradiction probabilities for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    entailment: f64,
    neutral: f64,
    contradiction: f64,
}

impl ScoreTriple {
    /// Each entry in [0, 1] and the sum within [`SCORE_SUM_TOLERANCE`] of 1.
    pub fn new(entailment: f64, neutral: f64, contradiction: f64) -> Result<Self, NliError> {
        for (name, p) in [
            ("entailment", entailment),
            ("neutral", neutral),
            ("contradiction", contradiction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NliError::Triple(format!("{name} = {p} outside [0, 1]")));
            }
        }
        let sum = entailment + neutral + contradiction;
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(NliError::Triple(format!("probabilities sum to {sum}")));
        }
        Ok(ScoreTriple {
            entailment,
            neutral,
            contradiction,
        })
    }

    /// Softmax over raw logits in (entailment, neutral, contradiction) order.
    pub fn from_logits(logits: [f64; 3]) -> Result<Self, NliError> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(NliError::Triple(format!("non-finite logits {logits:?}")));
        }
        let exp = logits.map(|l| (l - max).exp());
        let z: f64 = exp.iter().sum();
        Self::new(exp[0] / z, exp[1] / z, exp[2] / z)
    }

    pub fn entailment(&self) -> f64 {
        self.entailment
    }

    pub fn neutral(&self) -> f64 {
        self.neutral
    }

    pub fn contradiction(&self) -> f64 {
        self.contradiction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisCasing {
    /// "care", "degradation".
    #[default]
    Lower,
    /// "Care", "Degradation".
    AsIs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NliConfig {
    /// Inclusive cut-off on the normalized entailment score.
    pub threshold: f64,
    pub casing: HypothesisCasing,
    /// Premises longer than this many characters keep only their beginning.
    pub max_premise_chars: Option<usize>,
    /// Items per scorer call in batch classification.
    pub batch_size: usize,
}

impl Default for NliConfig {
    fn default() -> Self {
        NliConfig {
            threshold: 0.5,
            casing: HypothesisCasing::Lower,
            max_premise_chars: None,
            batch_size: 8,
        }
    }
}

pub fn build_hypothesis(label: ValueLabel) -> String {
    build_hypothesis_with(label, HypothesisCasing::Lower)
}

pub fn build_hypothesis_with(label: ValueLabel, casing: HypothesisCasing) -> String {
    let name = match casing {
        HypothesisCasing::Lower => label.name().to_lowercase(),
        HypothesisCasing::AsIs => label.name().to_string(),
    };
    format!("{HYPOTHESIS_PREFIX}{name}.")
}

/// `entailment / (entailment + neutral)`; contradiction does not enter.
pub fn normalize_entailment(scores: &ScoreTriple) -> Result<f64, NliError> {
    let denom = scores.entailment + scores.neutral;
    if denom <= 0.0 {
        return Err(NliError::DegenerateScore { label: None });
    }
    Ok(scores.entailment / denom)
}

/// Thresholds ten normalized scores (in [`ValueLabel::ALL`] order).
pub fn select_labels(normalized: &[f64; 10], threshold: f64) -> LabelVector {
    let mut labels: LabelVector = ValueLabel::ALL
        .iter()
        .zip(normalized)
        .filter(|(_, &s)| s >= threshold)
        .map(|(l, _)| l.dimension())
        .collect();
    if labels.is_empty() {
        labels = LabelVector::non_moral();
    }
    labels
}

fn truncate_premise(text: &str, limit: Option<usize>) -> &str {
    match limit {
        Some(max) => match text.char_indices().nth(max) {
            Some((cut, _)) => {
                log::info!(
                    "truncating premise from {} to {max} characters",
                    text.chars().count()
                );
                &text[..cut]
            }
            None => text,
        },
        None => text,
    }
}

fn effective_limit(config: &NliConfig, scorer: &dyn NliScorer) -> Option<usize> {
    match (config.max_premise_chars, scorer.max_premise_chars()) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn hypotheses(casing: HypothesisCasing) -> Vec<String> {
    ValueLabel::ALL
        .iter()
        .map(|&l| build_hypothesis_with(l, casing))
        .collect()
}

fn call_scorer(
    scorer: &dyn NliScorer,
    premises: &[&str],
    hyps: &[&str],
) -> Result<Vec<ScoreTriple>, NliError> {
    let triples = scorer.score(premises, hyps).map_err(|e| NliError::Scorer {
        pair_index: e.index.unwrap_or(0),
        message: e.message,
    })?;
    if triples.len() != premises.len() {
        return Err(NliError::LengthMismatch {
            expected: premises.len(),
            got: triples.len(),
        });
    }
    Ok(triples)
}

fn assemble(triples: &[ScoreTriple], threshold: f64) -> Result<PredictionSet, NliError> {
    let mut normalized = [0.0; 10];
    for (i, (triple, label)) in triples.iter().zip(ValueLabel::ALL).enumerate() {
        normalized[i] = normalize_entailment(triple)
            .map_err(|_| NliError::DegenerateScore { label: Some(label) })?;
    }
    let scores: BTreeMap<ValueLabel, f64> = ValueLabel::ALL.into_iter().zip(normalized).collect();
    Ok(PredictionSet {
        labels: select_labels(&normalized, threshold),
        scores: Some(LabelScores::PerValue(scores)),
    })
}

/// Scores all ten hypotheses against `text` and thresholds the normalized
/// entailment.
pub fn classify(
    text: &str,
    scorer: &dyn NliScorer,
    config: &NliConfig,
) -> Result<PredictionSet, NliError> {
    if text.trim().is_empty() {
        return Err(NliError::EmptyPremise);
    }
    let premise = truncate_premise(text, effective_limit(config, scorer));
    let hyps = hypotheses(config.casing);
    let hyp_refs: Vec<&str> = hyps.iter().map(String::as_str).collect();
    let premises = vec![premise; hyp_refs.len()];
    let triples = call_scorer(scorer, &premises, &hyp_refs)?;
    assemble(&triples, config.threshold)
}

/// Classifies many texts, batching `config.batch_size` items per scorer call.
///
/// Output order follows input order. If a batched call fails, the items of
/// that batch are retried one by one so errors land on the right item.
pub fn classify_batch(
    texts: &[&str],
    scorer: &dyn NliScorer,
    config: &NliConfig,
) -> Vec<Result<PredictionSet, NliError>> {
    let limit = effective_limit(config, scorer);
    let hyps = hypotheses(config.casing);
    let hyp_refs: Vec<&str> = hyps.iter().map(String::as_str).collect();
    let batch = config.batch_size.max(1);

    texts
        .par_chunks(batch)
        .flat_map_iter(|chunk| {
            if chunk.iter().any(|t| t.trim().is_empty()) {
                return chunk
                    .iter()
                    .map(|t| classify(t, scorer, config))
                    .collect::<Vec<_>>();
            }
            let mut premises = Vec::with_capacity(chunk.len() * hyp_refs.len());
            let mut hyp_list = Vec::with_capacity(premises.capacity());
            for text in chunk {
                let p = truncate_premise(text, limit);
                premises.extend(std::iter::repeat_n(p, hyp_refs.len()));
                hyp_list.extend_from_slice(&hyp_refs);
            }
            match call_scorer(scorer, &premises, &hyp_list) {
                Ok(triples) => triples
                    .chunks(hyp_refs.len())
                    .map(|t| assemble(t, config.threshold))
                    .collect(),
                Err(e) => {
                    log::warn!("batched scorer call failed ({e}); retrying items individually");
                    chunk.iter().map(|t| classify(t, scorer, config)).collect()
                }
            }
        })
        .collect()
}
