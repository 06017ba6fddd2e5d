use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::Features;
use super::{Classifier, ClassifierConfig, ModelArtifact, SupervisedError, NUM_LABELS};
use crate::corpus::GoldItem;

/// Numerically stable log(1 + e^x).
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Multi-label soft-margin loss for one item: the mean over labels of the
/// logistic loss, each term scaled by its class weight.
pub fn soft_margin_loss(
    logits: &[f64; NUM_LABELS],
    targets: &[f64; NUM_LABELS],
    weights: &[f64; NUM_LABELS],
) -> f64 {
    let sum: f64 = (0..NUM_LABELS)
        .map(|c| {
            let (z, y) = (logits[c], targets[c]);
            weights[c] * (y * softplus(-z) + (1.0 - y) * softplus(z))
        })
        .sum();
    sum / NUM_LABELS as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchLoss {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub batches: Vec<BatchLoss>,
    pub epochs: Vec<EpochLoss>,
}

impl TrainingLog {
    pub fn epoch_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn batch_losses(&self, epoch: usize) -> Vec<f64> {
        self.batches
            .iter()
            .filter(|b| b.epoch == epoch)
            .map(|b| b.loss)
            .collect()
    }
}

struct AdamW {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl AdamW {
    fn new(n: usize) -> Self {
        AdamW {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64], cfg: &ClassifierConfig) {
        self.step += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        for i in 0..params.len() {
            let g = grads[i];
            params[i] -= cfg.learning_rate * cfg.weight_decay * params[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Inverse-frequency weights normalized to mean 1; all ones when disabled.
fn class_weights(targets: &[[f64; NUM_LABELS]], enabled: bool) -> [f64; NUM_LABELS] {
    if !enabled {
        return [1.0; NUM_LABELS];
    }
    let n = targets.len() as f64;
    let raw: [f64; NUM_LABELS] = std::array::from_fn(|c| {
        let pos = targets.iter().filter(|t| t[c] > 0.5).count().max(1) as f64;
        n / pos
    });
    let mean = raw.iter().sum::<f64>() / NUM_LABELS as f64;
    raw.map(|w| w / mean)
}

/// Trains the head on gold items of a single sub-corpus.
///
/// Randomness (validation split, shuffling, dropout) comes from the config
/// seed on a stream separate from initialization.
pub fn train(mut model: Classifier, items: &[GoldItem]) -> Result<ModelArtifact, SupervisedError> {
    let first = items.first().ok_or(SupervisedError::EmptyTrainingSet)?;
    let corpus = first.subcorpus;
    if let Some(other) = items.iter().find(|i| i.subcorpus != corpus) {
        return Err(SupervisedError::MixedCorpora {
            expected: corpus,
            found: other.subcorpus,
            id: other.id.clone(),
        });
    }
    let cfg = model.config.clone();
    let encoder = model.encoder.clone();
    let features: Vec<Features> = items.par_iter().map(|i| encoder.encode(&i.text)).collect();
    let targets: Vec<[f64; NUM_LABELS]> = items
        .iter()
        .map(|i| i.gold.bits().map(|b| if b { 1.0 } else { 0.0 }))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut validation = Vec::new();
    if cfg.validation_fraction > 0.0 {
        order.shuffle(&mut rng);
        let k = ((items.len() as f64) * cfg.validation_fraction).round() as usize;
        let k = k.min(items.len() - 1);
        validation = order.drain(..k).collect();
        order.sort_unstable();
    }
    let weights = class_weights(&targets, cfg.class_weights);
    let dim = model.head.input_dim;
    let mut optimizer = AdamW::new(model.head.params.len());
    let mut grads = vec![0.0; model.head.params.len()];
    let keep = 1.0 - cfg.dropout;
    let mut log = TrainingLog::default();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            let scale = 1.0 / (batch.len() * NUM_LABELS) as f64;
            for &idx in batch {
                let dropped: Features = features[idx]
                    .iter()
                    .filter_map(|&(j, v)| {
                        if cfg.dropout == 0.0 {
                            Some((j, v))
                        } else if rng.random::<f64>() < keep {
                            Some((j, v / keep))
                        } else {
                            None
                        }
                    })
                    .collect();
                let logits = model.head.logits(&dropped);
                batch_loss += soft_margin_loss(&logits, &targets[idx], &weights);
                for c in 0..NUM_LABELS {
                    let g = weights[c] * (sigmoid(logits[c]) - targets[idx][c]) * scale;
                    let row = c * dim;
                    for &(j, v) in &dropped {
                        grads[row + j as usize] += g * v;
                    }
                    grads[NUM_LABELS * dim + c] += g;
                }
            }
            let loss = batch_loss / batch.len() as f64;
            if !loss.is_finite() {
                return Err(SupervisedError::NonFiniteLoss {
                    epoch,
                    batch: b + 1,
                    loss,
                });
            }
            optimizer.update(&mut model.head.params, &grads, &cfg);
            log.batches.push(BatchLoss {
                epoch,
                batch: b + 1,
                loss,
            });
            epoch_sum += batch_loss;
        }
        let mean_loss = epoch_sum / order.len() as f64;
        let validation_loss = (!validation.is_empty()).then(|| {
            validation
                .iter()
                .map(|&i| soft_margin_loss(&model.head.logits(&features[i]), &targets[i], &weights))
                .sum::<f64>()
                / validation.len() as f64
        });
        log::info!("epoch {epoch}: mean loss {mean_loss:.6}");
        log.epochs.push(EpochLoss {
            epoch,
            mean_loss,
            validation_loss,
        });
    }

    Ok(ModelArtifact {
        classifier: model,
        train_corpus: corpus,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_matches_direct_formula() {
        let z: [f64; 6] = [0.3, -1.2, 2.0, 0.0, -0.4, 5.0];
        let y = [1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        let direct: f64 = (0..6)
            .map(|c| {
                let p = 1.0 / (1.0 + (-z[c]).exp());
                -(y[c] * p.ln() + (1.0 - y[c]) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 6.0;
        assert!((soft_margin_loss(&z, &y, &[1.0; 6]) - direct).abs() < 1e-12);
        // Extreme logits stay finite.
        assert!(soft_margin_loss(&[800.0; 6], &[0.0; 6], &[1.0; 6]).is_finite());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn weights_default_to_one() {
        let t = [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ];
        assert_eq!(class_weights(&t, false), [1.0; 6]);
        let w = class_weights(&t, true);
        assert!((w.iter().sum::<f64>() - 6.0).abs() < 1e-12);
        assert!(w[1] == w[5] && w[0] < w[1]);
    }
}
