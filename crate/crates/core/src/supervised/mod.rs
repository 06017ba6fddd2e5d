//! Supervised multi-label classifier trained on one sub-corpus.
//!
//! Architecture: frozen [`Encoder`] → dropout → linear layer to six logits,
//! one independent logistic activation per label. Training minimizes the
//! multi-label soft-margin loss with AdamW.

mod artifact;
mod encoder;
mod train;

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{GoldItem, SubCorpus};
use crate::metrics::{evaluate, EvalOptions, MetricsError, MetricsReport};
use crate::prediction::{BackendKind, LabelScores, PredictionRecord, PredictionSet};
use crate::taxonomy::{LabelVector, MoralDimension};

pub use encoder::{resolve_encoder, Encoder, Features, HashingEncoder};
pub use train::{soft_margin_loss, train, BatchLoss, EpochLoss, TrainingLog};

pub const NUM_LABELS: usize = MoralDimension::COUNT;

/// Learning rate for training only the head over a frozen encoder. The
/// default 1e-5 is a fine-tuning rate; with nothing but a linear layer
/// learning it barely moves the loss within an epoch.
pub const FROZEN_HEAD_LEARNING_RATE: f64 = 1e-3;

/// Decision threshold on each label's probability.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum SupervisedError {
    #[error("cannot resolve encoder `{0}`")]
    UnresolvableEncoder(String),
    #[error("encoder produces {found} features but the head expects {expected}")]
    HiddenSizeMismatch { expected: usize, found: usize },
    #[error("invalid classifier config: {0}")]
    InvalidConfig(String),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training items must share one sub-corpus: expected {expected}, item `{id}` is from {found}")]
    MixedCorpora {
        expected: SubCorpus,
        found: SubCorpus,
        id: String,
    },
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        loss: f64,
    },
    #[error("artifact does not match its config: {0}")]
    ArtifactMismatch(String),
    #[error("artifact already exists at {0}")]
    ArtifactExists(PathBuf),
    #[error("training corpus {0} cannot be evaluated in its own cross-domain run")]
    InDomain(SubCorpus),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("config file: {0}")]
    ConfigFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub encoder: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Standard deviation of the normal head initialization.
    pub init_std: f64,
    /// Share of training items held out for a per-epoch validation loss.
    pub validation_fraction: f64,
    /// Inverse-frequency class weights in the loss.
    pub class_weights: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            encoder: "hashing:4096".into(),
            learning_rate: 1e-5,
            batch_size: 64,
            dropout: 0.1,
            epochs: 5,
            seed: 0,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_std: 0.02,
            validation_fraction: 0.0,
            class_weights: false,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), SupervisedError> {
        let bad = |m: String| Err(SupervisedError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            ));
        }
        if !(self.init_std >= 0.0)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return bad("init_std, beta1 or beta2 out of range".into());
        }
        Ok(())
    }
}

/// Linear layer parameters: six weight rows of `input_dim`, then six biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub(crate) input_dim: usize,
    pub(crate) params: Vec<f64>,
}

impl Head {
    fn logits(&self, x: &[(u32, f64)]) -> [f64; NUM_LABELS] {
        let bias = NUM_LABELS * self.input_dim;
        std::array::from_fn(|c| {
            let row = &self.params[c * self.input_dim..(c + 1) * self.input_dim];
            self.params[bias + c] + x.iter().map(|&(j, v)| row[j as usize] * v).sum::<f64>()
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }
}

/// Encoder plus head. Inference runs in evaluation mode (no dropout).
#[derive(Clone)]
pub struct Classifier {
    pub(crate) config: ClassifierConfig,
    pub(crate) encoder: Arc<dyn Encoder>,
    pub(crate) head: Head,
}

impl std::fmt::Debug for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Classifier")
            .field("encoder", &self.encoder.id())
            .field("input_dim", &self.head.input_dim)
            .finish()
    }
}

/// Builds an untrained classifier with a built-in encoder.
pub fn build_classifier(config: &ClassifierConfig) -> Result<Classifier, SupervisedError> {
    let encoder = resolve_encoder(&config.encoder)?;
    build_classifier_with(config, encoder)
}

/// Builds an untrained classifier around a caller-supplied encoder. Head
/// weights are drawn from N(0, init_std) and biases start at zero.
pub fn build_classifier_with(
    config: &ClassifierConfig,
    encoder: Arc<dyn Encoder>,
) -> Result<Classifier, SupervisedError> {
    config.validate()?;
    if encoder.id() != config.encoder {
        return Err(SupervisedError::InvalidConfig(format!(
            "encoder id `{}` does not match config `{}`",
            encoder.id(),
            config.encoder
        )));
    }
    let dim = encoder.dim();
    let normal = Normal::new(0.0, config.init_std)
        .map_err(|e| SupervisedError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: Vec<f64> = (0..NUM_LABELS * dim)
        .map(|_| normal.sample(&mut rng))
        .collect();
    params.extend([0.0; NUM_LABELS]);
    Ok(Classifier {
        config: config.clone(),
        encoder,
        head: Head {
            input_dim: dim,
            params,
        },
    })
}

impl Classifier {
    pub fn config(&self) -> &ClassifierConfig {
        &self.config
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    pub fn encoder(&self) -> &Arc<dyn Encoder> {
        &self.encoder
    }

    /// Per-label probabilities in [`MoralDimension::ALL`] order.
    pub fn probabilities(&self, text: &str) -> [f64; NUM_LABELS] {
        let x = self.encoder.encode(text);
        self.head.logits(&x).map(train::sigmoid)
    }

    pub fn predict(&self, text: &str) -> PredictionSet {
        let probs = self.probabilities(text);
        let scores: BTreeMap<MoralDimension, f64> = MoralDimension::ALL
            .iter()
            .map(|d| (*d, probs[d.index()]))
            .collect();
        PredictionSet {
            labels: decide(&probs),
            scores: Some(LabelScores::PerDimension(scores)),
        }
    }
}

/// Thresholds probabilities at [`THRESHOLD`]. An empty result becomes
/// Non-moral; Non-moral is dropped when any dimension also fires.
pub fn decide(probs: &[f64; NUM_LABELS]) -> LabelVector {
    let mut labels = LabelVector::from_bits(probs.map(|p| p >= THRESHOLD));
    if labels.has_moral() {
        labels.remove(MoralDimension::NonMoral);
    } else {
        labels = LabelVector::non_moral();
    }
    labels
}

/// A trained classifier with its provenance and loss history.
#[derive(Debug, Clone)]
pub struct ModelArtifact {
    pub classifier: Classifier,
    pub train_corpus: SubCorpus,
    pub log: TrainingLog,
}

impl ModelArtifact {
    pub fn predict(&self, text: &str) -> PredictionSet {
        self.classifier.predict(text)
    }

    /// Predicts every item in parallel; records come back sorted by id.
    pub fn predict_items(&self, items: &[GoldItem]) -> Vec<PredictionRecord> {
        let mut records: Vec<PredictionRecord> = items
            .par_iter()
            .map(|item| {
                let mut r = PredictionRecord::labeled(
                    &item.id,
                    BackendKind::Supervised,
                    self.predict(&item.text),
                );
                r.train_corpus = Some(self.train_corpus);
                r
            })
            .collect();
        records.sort_by(|a, b| a.id.cmp(&b.id));
        records
    }
}

pub fn predict(artifact: &ModelArtifact, text: &str) -> PredictionSet {
    artifact.predict(text)
}

#[derive(Debug, Clone)]
pub struct CrossDomainEval {
    pub eval_corpus: SubCorpus,
    pub report: MetricsReport,
    /// Evaluation items left out because their id also occurs in training.
    pub excluded_overlap: usize,
}

#[derive(Debug, Clone)]
pub struct CrossDomainRun {
    pub train_corpus: SubCorpus,
    pub artifact: ModelArtifact,
    pub evaluations: Vec<CrossDomainEval>,
}

/// Evaluates a trained artifact on another sub-corpus, skipping any item
/// whose id was seen in training.
pub fn evaluate_cross_domain(
    artifact: &ModelArtifact,
    train_ids: &HashSet<&str>,
    eval_items: &[GoldItem],
    eval_corpus: SubCorpus,
) -> Result<CrossDomainEval, SupervisedError> {
    if eval_corpus == artifact.train_corpus {
        return Err(SupervisedError::InDomain(eval_corpus));
    }
    let kept: Vec<GoldItem> = eval_items
        .iter()
        .filter(|i| !train_ids.contains(i.id.as_str()))
        .cloned()
        .collect();
    let excluded_overlap = eval_items.len() - kept.len();
    if excluded_overlap > 0 {
        log::warn!(
            "{excluded_overlap} items of corpus {eval_corpus} also occur in training; excluded"
        );
    }
    let predictions = artifact.predict_items(&kept);
    let report = evaluate(&predictions, &kept, eval_corpus, EvalOptions::default())?;
    Ok(CrossDomainEval {
        eval_corpus,
        report,
        excluded_overlap,
    })
}

/// Trains on the full `train` sub-corpus and evaluates on each other one.
/// `corpora` is indexed by [`SubCorpus::index`].
pub fn cross_domain_run(
    train: SubCorpus,
    corpora: &[Vec<GoldItem>; 3],
    config: &ClassifierConfig,
) -> Result<CrossDomainRun, SupervisedError> {
    let model = build_classifier(config)?;
    let train_items = &corpora[train.index()];
    let artifact = train::train(model, train_items)?;
    let train_ids: HashSet<&str> = train_items.iter().map(|i| i.id.as_str()).collect();
    let evaluations = SubCorpus::ALL
        .into_iter()
        .filter(|sc| *sc != train)
        .map(|sc| evaluate_cross_domain(&artifact, &train_ids, &corpora[sc.index()], sc))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CrossDomainRun {
        train_corpus: train,
        artifact,
        evaluations,
    })
}

#[cfg(test)]
mod tests;
