//! Gold-label construction from raw Moral Foundation Reddit Corpus annotations.
//!
//! The pipeline is: group rows into comments, drop uncertain annotations,
//! discard comments with fewer than two remaining annotators, merge the raw
//! label vocabulary onto the five-dyad taxonomy, then take a per-dimension
//! majority vote at 50%.

mod aggregate;
mod distribution;
mod load;
mod manifest;
mod merge;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{LabelVector, ValueLabel};

pub use aggregate::{
    aggregate_item, filter_annotations, AggregationConfig, FilterOutcome, TieRule,
};
pub use distribution::{
    DistributionDelta, LabelDistribution, SubCorpusDistribution, REFERENCE_DISTRIBUTION,
    TABLE_ROW_ORDER,
};
pub use load::{
    load_corpus, load_corpus_path, read_gold_items, write_gold_items, DiscardRecord, PreparedCorpus,
};
pub use manifest::{ColumnMap, Manifest};
pub use merge::{merge_raw_labels, LabelVocabulary};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("row {row}: {source}")]
    Csv {
        row: usize,
        #[source]
        source: csv::Error,
    },
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("row {row}: unknown sub-corpus value `{value}`")]
    UnknownSubCorpus { row: usize, value: String },
    #[error("row {row}: unmapped confidence value `{value}`")]
    UnmappedConfidence { row: usize, value: String },
    #[error("unknown raw label `{label}`{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    UnknownLabel { row: Option<usize>, label: String },
    #[error("row {row}: empty annotation label set")]
    EmptyLabels { row: usize },
    #[error("row {row}: empty annotator id")]
    EmptyAnnotator { row: usize },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The three MFRC sub-corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubCorpus {
    /// Everyday Moral Life.
    A,
    /// US Politics.
    B,
    /// French Politics.
    C,
}

impl SubCorpus {
    pub const ALL: [SubCorpus; 3] = [SubCorpus::A, SubCorpus::B, SubCorpus::C];

    pub fn tag(self) -> &'static str {
        match self {
            SubCorpus::A => "A",
            SubCorpus::B => "B",
            SubCorpus::C => "C",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SubCorpus::A => "Everyday Moral Life",
            SubCorpus::B => "US Politics",
            SubCorpus::C => "French Politics",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SubCorpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SubCorpus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "A" | "a" => Ok(SubCorpus::A),
            "B" | "b" => Ok(SubCorpus::B),
            "C" | "c" => Ok(SubCorpus::C),
            other => Err(format!(
                "unknown sub-corpus tag `{other}` (expected A, B or C)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Confident,
    Uncertain,
}

/// One annotator's judgement of one comment, in the raw release vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAnnotation {
    pub annotator_id: String,
    pub labels: Vec<String>,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedComment {
    pub id: String,
    pub text: String,
    pub subcorpus: SubCorpus,
    pub annotations: Vec<RawAnnotation>,
}

/// A raw label after vocabulary merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MergedLabel {
    Value(ValueLabel),
    NonMoral,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedAnnotation {
    pub annotator_id: String,
    pub labels: BTreeSet<MergedLabel>,
}

/// A filtered comment whose annotations have been mapped onto the taxonomy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedComment {
    pub id: String,
    pub text: String,
    pub subcorpus: SubCorpus,
    pub annotations: Vec<MergedAnnotation>,
}

impl MergedComment {
    /// Applies [`merge_raw_labels`] to every annotation of a filtered comment.
    pub fn from_filtered(
        comment: AnnotatedComment,
        vocabulary: &LabelVocabulary,
    ) -> Result<Self, CorpusError> {
        let annotations = comment
            .annotations
            .into_iter()
            .map(|a| {
                Ok(MergedAnnotation {
                    labels: merge_raw_labels(&a.labels, vocabulary)?,
                    annotator_id: a.annotator_id,
                })
            })
            .collect::<Result<Vec<_>, CorpusError>>()?;
        Ok(MergedComment {
            id: comment.id,
            text: comment.text,
            subcorpus: comment.subcorpus,
            annotations,
        })
    }
}

/// A comment with its aggregated gold label vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldItem {
    pub id: String,
    pub text: String,
    pub subcorpus: SubCorpus,
    pub gold: LabelVector,
    pub annotator_count: usize,
}

/// Why a comment did not become a gold item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Fewer than two confident annotations remained.
    TooFewAnnotators,
    /// Text empty after trimming.
    EmptyText,
    /// Neither a dimension nor the non-moral marker reached the majority.
    NoMajority,
}

impl DiscardReason {
    pub fn code(self) -> &'static str {
        match self {
            DiscardReason::TooFewAnnotators => "too_few_annotators",
            DiscardReason::EmptyText => "empty_text",
            DiscardReason::NoMajority => "no_majority",
        }
    }
}
