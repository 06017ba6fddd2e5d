use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::{self, RecordError};

use super::{
    aggregate_item, filter_annotations, merge_raw_labels, AggregationConfig, AnnotatedComment,
    CorpusError, DiscardReason, FilterOutcome, GoldItem, LabelDistribution, Manifest,
    MergedComment, RawAnnotation, SubCorpus,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub id: String,
    pub subcorpus: SubCorpus,
    pub reason: DiscardReason,
}

/// Gold items per sub-corpus, each sorted by id, plus the discard log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreparedCorpus {
    items: [Vec<GoldItem>; 3],
    pub discards: Vec<DiscardRecord>,
    /// Distinct (sub-corpus, comment id) pairs seen in the input.
    pub input_comments: usize,
    /// Repeated (comment, annotator) rows that were dropped.
    pub duplicate_rows: usize,
}

impl PreparedCorpus {
    pub fn get(&self, subcorpus: SubCorpus) -> &[GoldItem] {
        &self.items[subcorpus.index()]
    }

    pub fn into_parts(self) -> [Vec<GoldItem>; 3] {
        self.items
    }

    pub fn total_items(&self) -> usize {
        self.items.iter().map(Vec::len).sum()
    }

    pub fn distribution(&self) -> LabelDistribution {
        LabelDistribution::from_items(self.items.iter().flatten())
    }
}

struct Group {
    text: String,
    annotations: Vec<RawAnnotation>,
    annotators: HashSet<String>,
}

/// Stable id for releases without an id column.
pub(crate) fn derive_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Reads a raw annotation table and produces gold items per sub-corpus.
pub fn load_corpus<R: Read>(
    reader: R,
    manifest: &Manifest,
    config: &AggregationConfig,
) -> Result<PreparedCorpus, CorpusError> {
    let vocabulary = manifest.vocabulary()?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(u8::try_from(manifest.delimiter).map_err(|_| {
            CorpusError::Manifest(format!("delimiter `{}` is not ASCII", manifest.delimiter))
        })?)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|source| CorpusError::Csv { row: 1, source })?
        .clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Ok(PreparedCorpus::default());
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::MissingColumn(name.to_string()))
    };
    let cols = &manifest.columns;
    let id_col = cols.id.as_deref().map(column).transpose()?;
    let text_col = column(&cols.text)?;
    let bucket_col = column(&cols.bucket)?;
    let annotator_col = column(&cols.annotator)?;
    let labels_col = column(&cols.labels)?;
    let confidence_col = column(&cols.confidence)?;

    let mut groups: BTreeMap<(SubCorpus, String), Group> = BTreeMap::new();
    let mut duplicate_rows = 0;

    for result in rdr.records() {
        let record = result.map_err(|source| CorpusError::Csv {
            row: source.position().map(|p| p.line() as usize).unwrap_or(0),
            source,
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("");

        let bucket = field(bucket_col);
        let subcorpus =
            manifest
                .subcorpus_of(bucket)
                .ok_or_else(|| CorpusError::UnknownSubCorpus {
                    row,
                    value: bucket.to_string(),
                })?;
        let conf_raw = field(confidence_col);
        let confidence =
            manifest
                .confidence_of(conf_raw)
                .ok_or_else(|| CorpusError::UnmappedConfidence {
                    row,
                    value: conf_raw.to_string(),
                })?;
        let labels: Vec<String> = field(labels_col)
            .split(manifest.label_separator.as_str())
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if labels.is_empty() {
            return Err(CorpusError::EmptyLabels { row });
        }
        merge_raw_labels(&labels, &vocabulary).map_err(|e| match e {
            CorpusError::UnknownLabel { label, .. } => CorpusError::UnknownLabel {
                row: Some(row),
                label,
            },
            other => other,
        })?;
        let annotator_id = field(annotator_col).trim().to_string();
        if annotator_id.is_empty() {
            return Err(CorpusError::EmptyAnnotator { row });
        }

        let text = field(text_col).to_string();
        let id = match id_col {
            Some(c) => field(c).trim().to_string(),
            None => derive_id(&text),
        };

        let group = groups.entry((subcorpus, id)).or_insert_with(|| Group {
            text,
            annotations: Vec::new(),
            annotators: HashSet::new(),
        });
        if !group.annotators.insert(annotator_id.clone()) {
            duplicate_rows += 1;
            continue;
        }
        group.annotations.push(RawAnnotation {
            annotator_id,
            labels,
            confidence,
        });
    }

    let input_comments = groups.len();
    let outcomes: Vec<Result<(SubCorpus, String, Result<GoldItem, DiscardReason>), CorpusError>> =
        groups
            .into_iter()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|((subcorpus, id), group)| {
                let comment = AnnotatedComment {
                    id: id.clone(),
                    text: group.text,
                    subcorpus,
                    annotations: group.annotations,
                };
                let outcome = match filter_annotations(comment) {
                    FilterOutcome::Discard(reason) => Err(reason),
                    FilterOutcome::Kept(c) => {
                        let merged = MergedComment::from_filtered(c, &vocabulary)?;
                        aggregate_item(&merged, config)
                    }
                };
                Ok((subcorpus, id, outcome))
            })
            .collect();

    let mut prepared = PreparedCorpus {
        input_comments,
        duplicate_rows,
        ..Default::default()
    };
    for outcome in outcomes {
        let (subcorpus, id, result) = outcome?;
        match result {
            Ok(item) => prepared.items[subcorpus.index()].push(item),
            Err(reason) => {
                log::debug!("discarding {subcorpus}/{id}: {}", reason.code());
                prepared.discards.push(DiscardRecord {
                    id,
                    subcorpus,
                    reason,
                });
            }
        }
    }
    Ok(prepared)
}

pub fn load_corpus_path(
    path: &Path,
    manifest: &Manifest,
    config: &AggregationConfig,
) -> Result<PreparedCorpus, CorpusError> {
    load_corpus(std::fs::File::open(path)?, manifest, config)
}

/// Writes one JSON record per line.
pub fn write_gold_items<W: Write>(writer: W, items: &[GoldItem]) -> Result<(), CorpusError> {
    Ok(jsonl::write_records(writer, items)?)
}

pub fn read_gold_items<R: Read>(reader: R) -> Result<Vec<GoldItem>, CorpusError> {
    jsonl::read_records(reader).map_err(|e| match e {
        RecordError::Parse { line, source } => CorpusError::Record { line, source },
        RecordError::Io(e) => CorpusError::Io(e),
    })
}
