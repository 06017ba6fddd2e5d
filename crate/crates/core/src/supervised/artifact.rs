//! On-disk layout of a trained model:
//!
//! ```text
//! <dir>/params.bin         magic, label count, input dim, then f64 LE params
//! <dir>/config.toml        training corpus, label order, classifier config
//! <dir>/training_log.tsv   record, epoch, batch, loss
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    resolve_encoder, BatchLoss, Classifier, ClassifierConfig, Encoder, EpochLoss, Head,
    ModelArtifact, SupervisedError, TrainingLog, NUM_LABELS,
};
use crate::corpus::SubCorpus;
use crate::taxonomy::MoralDimension;

const MAGIC: &[u8; 8] = b"MSHEAD01";
pub const PARAMS_FILE: &str = "params.bin";
pub const CONFIG_FILE: &str = "config.toml";
pub const LOG_FILE: &str = "training_log.tsv";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    train_corpus: SubCorpus,
    labels: Vec<MoralDimension>,
    input_dim: usize,
    classifier: ClassifierConfig,
}

fn mismatch(msg: impl Into<String>) -> SupervisedError {
    SupervisedError::ArtifactMismatch(msg.into())
}

fn encode_params(head: &Head) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + head.params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(NUM_LABELS as u64).to_le_bytes());
    out.extend_from_slice(&(head.input_dim as u64).to_le_bytes());
    for p in &head.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

fn decode_params(bytes: &[u8]) -> Result<Head, SupervisedError> {
    if bytes.len() < 24 || &bytes[..8] != MAGIC {
        return Err(mismatch("params.bin has no valid header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap()) as usize;
    let (labels, dim) = (word(8), word(16));
    if labels != NUM_LABELS {
        return Err(mismatch(format!(
            "params.bin has {labels} labels, expected {NUM_LABELS}"
        )));
    }
    let expected = labels
        .checked_mul(dim + 1)
        .ok_or_else(|| mismatch("params.bin header overflows"))?;
    let body = &bytes[24..];
    if body.len() != expected * 8 {
        return Err(mismatch(format!(
            "params.bin holds {} values, header implies {expected}",
            body.len() / 8
        )));
    }
    let params = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Head {
        input_dim: dim,
        params,
    })
}

fn log_to_tsv(log: &TrainingLog) -> String {
    let mut s = String::from("record\tepoch\tbatch\tloss\n");
    for b in &log.batches {
        let _ = writeln!(s, "batch\t{}\t{}\t{}", b.epoch, b.batch, b.loss);
    }
    for e in &log.epochs {
        let _ = writeln!(s, "epoch\t{}\t\t{}", e.epoch, e.mean_loss);
        if let Some(v) = e.validation_loss {
            let _ = writeln!(s, "validation\t{}\t\t{}", e.epoch, v);
        }
    }
    s
}

fn log_from_tsv(text: &str) -> Result<TrainingLog, SupervisedError> {
    let mut log = TrainingLog::default();
    let mut lines = text.lines();
    if lines.next() != Some("record\tepoch\tbatch\tloss") {
        return Err(mismatch("training_log.tsv has an unexpected header"));
    }
    for (n, line) in lines.enumerate() {
        let bad = || mismatch(format!("training_log.tsv line {}: `{line}`", n + 2));
        let cols: Vec<&str> = line.split('\t').collect();
        let [kind, epoch, batch, loss] = cols[..] else {
            return Err(bad());
        };
        let epoch: usize = epoch.parse().map_err(|_| bad())?;
        let loss: f64 = loss.parse().map_err(|_| bad())?;
        match kind {
            "batch" => log.batches.push(BatchLoss {
                epoch,
                batch: batch.parse().map_err(|_| bad())?,
                loss,
            }),
            "epoch" => log.epochs.push(EpochLoss {
                epoch,
                mean_loss: loss,
                validation_loss: None,
            }),
            "validation" => {
                let e = log
                    .epochs
                    .iter_mut()
                    .find(|e| e.epoch == epoch)
                    .ok_or_else(bad)?;
                e.validation_loss = Some(loss);
            }
            _ => return Err(bad()),
        }
    }
    Ok(log)
}

impl ModelArtifact {
    /// Writes the artifact into `dir`, creating it. Refuses to overwrite an
    /// existing artifact.
    pub fn save(&self, dir: &Path) -> Result<(), SupervisedError> {
        if dir.join(PARAMS_FILE).exists() || dir.join(CONFIG_FILE).exists() {
            return Err(SupervisedError::ArtifactExists(dir.to_path_buf()));
        }
        fs::create_dir_all(dir)?;
        let snapshot = Snapshot {
            train_corpus: self.train_corpus,
            labels: MoralDimension::ALL.to_vec(),
            input_dim: self.classifier.head.input_dim,
            classifier: self.classifier.config.clone(),
        };
        let toml =
            toml::to_string(&snapshot).map_err(|e| SupervisedError::ConfigFormat(e.to_string()))?;
        fs::write(dir.join(CONFIG_FILE), toml)?;
        fs::write(dir.join(LOG_FILE), log_to_tsv(&self.log))?;
        fs::write(dir.join(PARAMS_FILE), encode_params(&self.classifier.head))?;
        Ok(())
    }

    /// Loads an artifact whose encoder is built in.
    pub fn load(dir: &Path) -> Result<Self, SupervisedError> {
        Self::load_with(dir, resolve_encoder)
    }

    /// Loads an artifact, resolving the encoder id through `resolve`.
    pub fn load_with<F>(dir: &Path, resolve: F) -> Result<Self, SupervisedError>
    where
        F: FnOnce(&str) -> Result<Arc<dyn Encoder>, SupervisedError>,
    {
        let text = fs::read_to_string(dir.join(CONFIG_FILE))?;
        let snapshot: Snapshot =
            toml::from_str(&text).map_err(|e| SupervisedError::ConfigFormat(e.to_string()))?;
        snapshot.classifier.validate()?;
        if snapshot.labels != MoralDimension::ALL {
            return Err(mismatch("label order differs from this build"));
        }
        let head = decode_params(&fs::read(dir.join(PARAMS_FILE))?)?;
        if head.input_dim != snapshot.input_dim {
            return Err(mismatch(format!(
                "params.bin input dim {} but config says {}",
                head.input_dim, snapshot.input_dim
            )));
        }
        let encoder = resolve(&snapshot.classifier.encoder)?;
        if encoder.dim() != head.input_dim {
            return Err(SupervisedError::HiddenSizeMismatch {
                expected: head.input_dim,
                found: encoder.dim(),
            });
        }
        let log = log_from_tsv(&fs::read_to_string(dir.join(LOG_FILE))?)?;
        Ok(ModelArtifact {
            classifier: Classifier {
                config: snapshot.classifier,
                encoder,
                head,
            },
            train_corpus: snapshot.train_corpus,
            log,
        })
    }
}
