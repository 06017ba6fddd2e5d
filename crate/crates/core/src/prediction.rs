//! Backend outputs and their on-disk records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::SubCorpus;
use crate::taxonomy::{LabelVector, MoralDimension, ValueLabel};

/// Optional per-label scores attached to a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelScores {
    /// Normalized entailment per value label.
    PerValue(BTreeMap<ValueLabel, f64>),
    /// Probability per output label.
    PerDimension(BTreeMap<MoralDimension, f64>),
}

/// A backend's multi-hot output over the six labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: LabelVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<LabelScores>,
}

impl PredictionSet {
    pub fn new(labels: LabelVector) -> Self {
        PredictionSet {
            labels,
            scores: None,
        }
    }

    pub fn non_moral() -> Self {
        Self::new(LabelVector::non_moral())
    }

    /// Per-dimension view of the scores. Value-label scores report the max of
    /// each dyad's two members.
    pub fn dimension_scores(&self) -> Option<BTreeMap<MoralDimension, f64>> {
        match self.scores.as_ref()? {
            LabelScores::PerDimension(m) => Some(m.clone()),
            LabelScores::PerValue(m) => {
                let mut out = BTreeMap::new();
                for (label, &score) in m {
                    let e = out.entry(label.dimension()).or_insert(f64::NEG_INFINITY);
                    *e = f64::max(*e, score);
                }
                Some(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionStatus {
    #[default]
    Labeled,
    /// The backend answered but the answer could not be interpreted.
    Unparsed,
    /// The backend could not be reached or returned an error.
    Failed,
}

impl PredictionStatus {
    fn is_labeled(&self) -> bool {
        *self == PredictionStatus::Labeled
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Nli,
    Llm,
    Supervised,
}

impl BackendKind {
    pub fn tag(self) -> &'static str {
        match self {
            BackendKind::Nli => "nli",
            BackendKind::Llm => "llm",
            BackendKind::Supervised => "supervised",
        }
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nli" => Ok(BackendKind::Nli),
            "llm" => Ok(BackendKind::Llm),
            "supervised" => Ok(BackendKind::Supervised),
            other => Err(format!(
                "unknown backend `{other}` (expected nli, llm or supervised)"
            )),
        }
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub backend: BackendKind,
    pub labels: LabelVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<LabelScores>,
    #[serde(default, skip_serializing_if = "PredictionStatus::is_labeled")]
    pub status: PredictionStatus,
    /// Training sub-corpus of the supervised model that produced this record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_corpus: Option<SubCorpus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    pub fn labeled(id: impl Into<String>, backend: BackendKind, set: PredictionSet) -> Self {
        PredictionRecord {
            id: id.into(),
            backend,
            labels: set.labels,
            scores: set.scores,
            status: PredictionStatus::Labeled,
            train_corpus: None,
            error: None,
        }
    }

    pub fn unlabeled(
        id: impl Into<String>,
        backend: BackendKind,
        status: PredictionStatus,
        error: impl Into<String>,
    ) -> Self {
        PredictionRecord {
            id: id.into(),
            backend,
            labels: LabelVector::empty(),
            scores: None,
            status,
            train_corpus: None,
            error: Some(error.into()),
        }
    }
}
