//! Precision, recall and F1 for six-label multi-hot predictions.
//!
//! Headline numbers are support-weighted averages over all six labels,
//! Non-moral included. Micro and macro averages are kept alongside.

mod render;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{GoldItem, SubCorpus};
use crate::prediction::{BackendKind, PredictionRecord, PredictionStatus};
use crate::taxonomy::{LabelVector, MoralDimension};

pub use render::{render_report, summary_rows, ModelKey, RenderedTable, SummaryRow};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{count} prediction ids have no gold item (first: {first})")]
    MissingGold { count: usize, first: String },
    #[error("{count} gold ids have no prediction (first: {first})")]
    MissingPrediction { count: usize, first: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("total gold support is zero")]
    ZeroSupport,
    #[error("predictions mix backends or training corpora")]
    MixedRun,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Per-label confusion counts, indexed by [`MoralDimension::index`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub per_label: [Confusion; 6],
}

impl LabelCounts {
    pub fn get(&self, dim: MoralDimension) -> Confusion {
        self.per_label[dim.index()]
    }

    pub fn add(&mut self, predicted: LabelVector, gold: LabelVector) {
        for dim in MoralDimension::ALL {
            let c = &mut self.per_label[dim.index()];
            match (predicted.contains(dim), gold.contains(dim)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }

    pub fn total_support(&self) -> usize {
        self.per_label.iter().map(Confusion::support).sum()
    }
}

/// Compares predictions with gold labels, aligned by id. Both collections
/// must cover exactly the same ids.
pub fn count_confusions(
    predictions: &[(&str, LabelVector)],
    golds: &[(&str, LabelVector)],
) -> Result<LabelCounts, MetricsError> {
    let mut gold_map: HashMap<&str, LabelVector> = HashMap::with_capacity(golds.len());
    for (id, g) in golds {
        if gold_map.insert(id, *g).is_some() {
            return Err(MetricsError::DuplicateId(id.to_string()));
        }
    }
    let mut counts = LabelCounts::default();
    let mut seen = std::collections::HashSet::with_capacity(predictions.len());
    let mut missing_gold = Vec::new();
    for (id, p) in predictions {
        if !seen.insert(*id) {
            return Err(MetricsError::DuplicateId(id.to_string()));
        }
        match gold_map.get(id) {
            Some(g) => counts.add(*p, *g),
            None => missing_gold.push(*id),
        }
    }
    if let Some(first) = missing_gold.iter().min() {
        return Err(MetricsError::MissingGold {
            count: missing_gold.len(),
            first: first.to_string(),
        });
    }
    let mut missing_pred: Vec<&str> = golds
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| !seen.contains(id))
        .collect();
    missing_pred.sort_unstable();
    if let Some(first) = missing_pred.first() {
        return Err(MetricsError::MissingPrediction {
            count: missing_pred.len(),
            first: first.to_string(),
        });
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Metrics for one label. Undefined ratios are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// No predictions for this label, so precision is undefined.
    pub no_predictions: bool,
    /// No gold occurrences, so recall is undefined.
    pub no_support: bool,
}

impl LabelMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let p = ratio(c.tp, c.tp + c.fp);
        let r = ratio(c.tp, c.support());
        let precision = p.unwrap_or(0.0);
        let recall = r.unwrap_or(0.0);
        LabelMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: c.support(),
            no_predictions: p.is_none(),
            no_support: r.is_none(),
        }
    }
}

/// Support-weighted precision, recall and F1 over the six labels.
pub fn weighted_prf(counts: &LabelCounts) -> Result<Prf, MetricsError> {
    let total = counts.total_support();
    if total == 0 {
        return Err(MetricsError::ZeroSupport);
    }
    let mut acc = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for c in counts.per_label {
        let m = LabelMetrics::from_confusion(c);
        let w = m.support as f64;
        acc.precision += m.precision * w;
        acc.recall += m.recall * w;
        acc.f1 += m.f1 * w;
    }
    let t = total as f64;
    Ok(Prf {
        precision: acc.precision / t,
        recall: acc.recall / t,
        f1: acc.f1 / t,
    })
}

pub fn micro_prf(counts: &LabelCounts) -> Prf {
    let (tp, fp, fn_) = counts
        .per_label
        .iter()
        .fold((0, 0, 0), |(a, b, c), x| (a + x.tp, b + x.fp, c + x.fn_));
    let precision = ratio(tp, tp + fp).unwrap_or(0.0);
    let recall = ratio(tp, tp + fn_).unwrap_or(0.0);
    Prf {
        precision,
        recall,
        f1: harmonic(precision, recall),
    }
}

pub fn macro_prf(counts: &LabelCounts) -> Prf {
    let ms: Vec<LabelMetrics> = counts
        .per_label
        .iter()
        .map(|c| LabelMetrics::from_confusion(*c))
        .collect();
    let n = ms.len() as f64;
    Prf {
        precision: ms.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: ms.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: ms.iter().map(|m| m.f1).sum::<f64>() / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelF1 {
    pub f1: f64,
    pub no_support: bool,
}

pub fn per_label_f1(counts: &LabelCounts, label: MoralDimension) -> LabelF1 {
    let m = LabelMetrics::from_confusion(counts.get(label));
    LabelF1 {
        f1: m.f1,
        no_support: m.no_support,
    }
}

/// Metrics for one (backend, training corpus, evaluation corpus) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_corpus: Option<SubCorpus>,
    pub eval_corpus: SubCorpus,
    pub per_label: BTreeMap<MoralDimension, LabelMetrics>,
    pub weighted: Prf,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_: Prf,
    pub counts: LabelCounts,
    /// Items scored.
    pub item_count: usize,
    /// Items left out because the backend produced no usable answer.
    pub unparsed_count: usize,
}

impl MetricsReport {
    pub fn from_counts(
        backend: BackendKind,
        train_corpus: Option<SubCorpus>,
        eval_corpus: SubCorpus,
        counts: LabelCounts,
        item_count: usize,
        unparsed_count: usize,
    ) -> Result<Self, MetricsError> {
        Ok(MetricsReport {
            backend,
            train_corpus,
            eval_corpus,
            per_label: MoralDimension::ALL
                .iter()
                .map(|d| (*d, LabelMetrics::from_confusion(counts.get(*d))))
                .collect(),
            weighted: weighted_prf(&counts)?,
            micro: micro_prf(&counts),
            macro_: macro_prf(&counts),
            counts,
            item_count,
            unparsed_count,
        })
    }

    pub fn model(&self) -> ModelKey {
        ModelKey {
            backend: self.backend,
            train_corpus: self.train_corpus,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Score unparsed or failed items as Non-moral instead of leaving them out.
    pub unparsed_as_non_moral: bool,
}

/// Scores a prediction file against the gold items of one sub-corpus.
pub fn evaluate(
    predictions: &[PredictionRecord],
    golds: &[GoldItem],
    eval_corpus: SubCorpus,
    options: EvalOptions,
) -> Result<MetricsReport, MetricsError> {
    let first = predictions.first();
    let backend = first.map(|p| p.backend).unwrap_or(BackendKind::Nli);
    let train_corpus = first.and_then(|p| p.train_corpus);
    if predictions
        .iter()
        .any(|p| p.backend != backend || p.train_corpus != train_corpus)
    {
        return Err(MetricsError::MixedRun);
    }

    let mut skipped = std::collections::HashSet::new();
    let mut pred_pairs = Vec::with_capacity(predictions.len());
    for p in predictions {
        match p.status {
            PredictionStatus::Labeled => pred_pairs.push((p.id.as_str(), p.labels)),
            _ if options.unparsed_as_non_moral => {
                pred_pairs.push((p.id.as_str(), LabelVector::non_moral()))
            }
            _ => {
                skipped.insert(p.id.as_str());
            }
        }
    }
    let all_ids: std::collections::HashSet<&str> =
        predictions.iter().map(|p| p.id.as_str()).collect();
    let gold_pairs: Vec<(&str, LabelVector)> = golds
        .iter()
        .filter(|g| !skipped.contains(g.id.as_str()) || !all_ids.contains(g.id.as_str()))
        .map(|g| (g.id.as_str(), g.gold))
        .collect();

    let counts = count_confusions(&pred_pairs, &gold_pairs)?;
    MetricsReport::from_counts(
        backend,
        train_corpus,
        eval_corpus,
        counts,
        pred_pairs.len(),
        skipped.len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lv(bits: [bool; 6]) -> LabelVector {
        LabelVector::from_bits(bits)
    }

    fn single(tp: usize, fp: usize, fn_: usize) -> LabelCounts {
        let mut c = LabelCounts::default();
        c.per_label[0] = Confusion { tp, fp, fn_ };
        c
    }

    #[test]
    fn perfect_single_label() {
        let p = weighted_prf(&single(1, 0, 0)).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn symmetric_errors() {
        let p = weighted_prf(&single(1, 1, 1)).unwrap();
        assert_eq!((p.precision, p.recall, p.f1), (0.5, 0.5, 0.5));
    }

    #[test]
    fn support_weighting() {
        // Supports 3 and 1 with F1 1.0 and 0.0: (3 * 1 + 1 * 0) / 4.
        let mut c = LabelCounts::default();
        c.per_label[0] = Confusion {
            tp: 3,
            fp: 0,
            fn_: 0,
        };
        c.per_label[1] = Confusion {
            tp: 0,
            fp: 2,
            fn_: 1,
        };
        assert_eq!(weighted_prf(&c).unwrap().f1, 0.75);
    }

    #[test]
    fn zero_support_errors() {
        assert_eq!(
            weighted_prf(&LabelCounts::default()),
            Err(MetricsError::ZeroSupport)
        );
    }

    #[test]
    fn degenerate_label() {
        let f = per_label_f1(&LabelCounts::default(), MoralDimension::PurityDegradation);
        assert_eq!(f.f1, 0.0);
        assert!(f.no_support);
        let m = LabelMetrics::from_confusion(Confusion {
            tp: 0,
            fp: 0,
            fn_: 4,
        });
        assert!(m.no_predictions && !m.no_support);
        assert_eq!(m.precision, 0.0);
    }

    #[test]
    fn perfect_predictions_have_no_errors() {
        let items = [
            ("a", lv([true, false, false, false, false, false])),
            ("b", LabelVector::non_moral()),
            ("c", lv([false, true, true, false, false, false])),
        ];
        let c = count_confusions(&items, &items).unwrap();
        assert!(c.per_label.iter().all(|x| x.fp == 0 && x.fn_ == 0));
        assert_eq!(count_confusions(&[], &[]).unwrap(), LabelCounts::default());
    }

    #[test]
    fn alignment_errors() {
        let a = [("a", LabelVector::non_moral())];
        let b = [("b", LabelVector::non_moral())];
        assert!(matches!(
            count_confusions(&a, &b),
            Err(MetricsError::MissingGold { .. })
        ));
        assert!(matches!(
            count_confusions(
                &a,
                &[
                    ("a", LabelVector::non_moral()),
                    ("b", LabelVector::non_moral())
                ]
            ),
            Err(MetricsError::MissingPrediction { .. })
        ));
        assert!(matches!(
            count_confusions(&[a[0], a[0]], &a),
            Err(MetricsError::DuplicateId(_))
        ));
    }

    /// Reference implementation: per-label lists of (pred, gold) bits, scored
    /// label by label with no shared code.
    fn reference(pairs: &[([bool; 6], [bool; 6])]) -> (f64, f64, f64, [f64; 6]) {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        let mut f_sum = 0.0;
        let mut supp_sum = 0.0;
        let mut f1s = [0.0; 6];
        for l in 0..6 {
            let preds: Vec<bool> = pairs.iter().map(|(p, _)| p[l]).collect();
            let golds: Vec<bool> = pairs.iter().map(|(_, g)| g[l]).collect();
            let tp = preds.iter().zip(&golds).filter(|(p, g)| **p && **g).count() as f64;
            let predicted = preds.iter().filter(|p| **p).count() as f64;
            let support = golds.iter().filter(|g| **g).count() as f64;
            let prec = if predicted > 0.0 { tp / predicted } else { 0.0 };
            let rec = if support > 0.0 { tp / support } else { 0.0 };
            let f1 = if tp > 0.0 {
                2.0 * tp / (predicted + support)
            } else {
                0.0
            };
            f1s[l] = f1;
            p_sum += prec * support;
            r_sum += rec * support;
            f_sum += f1 * support;
            supp_sum += support;
        }
        (p_sum / supp_sum, r_sum / supp_sum, f_sum / supp_sum, f1s)
    }

    #[test]
    fn agrees_with_reference_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..60);
            let pairs: Vec<([bool; 6], [bool; 6])> = (0..n)
                .map(|_| {
                    let p: [bool; 6] = std::array::from_fn(|_| rng.random_bool(0.3));
                    let mut g: [bool; 6] = std::array::from_fn(|_| rng.random_bool(0.3));
                    g[5] = g[5] || g.iter().all(|b| !b);
                    (p, g)
                })
                .collect();
            let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
            let preds: Vec<_> = ids
                .iter()
                .zip(&pairs)
                .map(|(id, (p, _))| (id.as_str(), lv(*p)))
                .collect();
            let golds: Vec<_> = ids
                .iter()
                .zip(&pairs)
                .map(|(id, (_, g))| (id.as_str(), lv(*g)))
                .collect();
            let counts = count_confusions(&preds, &golds).unwrap();
            let w = weighted_prf(&counts).unwrap();
            let (p, r, f, f1s) = reference(&pairs);
            assert!((w.precision - p).abs() < 1e-9);
            assert!((w.recall - r).abs() < 1e-9);
            assert!((w.f1 - f).abs() < 1e-9);
            for d in MoralDimension::ALL {
                assert!((per_label_f1(&counts, d).f1 - f1s[d.index()]).abs() < 1e-9);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pairs() -> impl Strategy<Value = Vec<([bool; 6], [bool; 6])>> {
            proptest::collection::vec(
                (
                    proptest::array::uniform6(any::<bool>()),
                    proptest::array::uniform6(any::<bool>()),
                )
                    .prop_filter("gold support", |(_, g)| g.iter().any(|b| *b)),
                1..40,
            )
        }

        fn score(pairs: &[([bool; 6], [bool; 6])]) -> Prf {
            let ids: Vec<String> = (0..pairs.len()).map(|i| i.to_string()).collect();
            let p: Vec<_> = ids
                .iter()
                .zip(pairs)
                .map(|(i, x)| (i.as_str(), lv(x.0)))
                .collect();
            let g: Vec<_> = ids
                .iter()
                .zip(pairs)
                .map(|(i, x)| (i.as_str(), lv(x.1)))
                .collect();
            weighted_prf(&count_confusions(&p, &g).unwrap()).unwrap()
        }

        proptest! {
            #[test]
            fn bounded(ps in pairs()) {
                let w = score(&ps);
                for v in [w.precision, w.recall, w.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }

            #[test]
            fn item_order_invariant(ps in pairs(), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                let mut shuffled = ps.clone();
                shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let a = score(&ps);
                let b = score(&shuffled);
                prop_assert!((a.f1 - b.f1).abs() < 1e-12);
            }

            #[test]
            fn label_order_invariant(ps in pairs(), rot in 1usize..6) {
                let rotated: Vec<_> = ps.iter().map(|(p, g)| {
                    let mut p = *p; let mut g = *g;
                    p.rotate_left(rot); g.rotate_left(rot);
                    (p, g)
                }).collect();
                prop_assert!((score(&ps).f1 - score(&rotated).f1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_f1_gives_same_weighted() {
        // Every label with TP=1, FP=1, FN=1 has F1 0.5.
        let mut c = LabelCounts::default();
        for (i, x) in c.per_label.iter_mut().enumerate() {
            *x = Confusion {
                tp: i + 1,
                fp: i + 1,
                fn_: i + 1,
            };
        }
        assert!((weighted_prf(&c).unwrap().f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn evaluate_excludes_unparsed_by_default() {
        let gold = |id: &str, v: LabelVector| GoldItem {
            id: id.into(),
            text: "t".into(),
            subcorpus: SubCorpus::A,
            gold: v,
            annotator_count: 2,
        };
        let golds = vec![
            gold("a", LabelVector::non_moral()),
            gold("b", LabelVector::non_moral()),
        ];
        let preds = vec![
            PredictionRecord::labeled("a", BackendKind::Llm, crate::PredictionSet::non_moral()),
            PredictionRecord::unlabeled("b", BackendKind::Llm, PredictionStatus::Unparsed, "?"),
        ];
        let r = evaluate(&preds, &golds, SubCorpus::A, EvalOptions::default()).unwrap();
        assert_eq!((r.item_count, r.unparsed_count), (1, 1));
        assert_eq!(r.weighted.f1, 1.0);
        let r = evaluate(
            &preds,
            &golds,
            SubCorpus::A,
            EvalOptions {
                unparsed_as_non_moral: true,
            },
        )
        .unwrap();
        assert_eq!((r.item_count, r.unparsed_count), (2, 0));
        assert_eq!(r.weighted.f1, 1.0);
    }
}
