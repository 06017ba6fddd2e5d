//! Python bindings: label helpers, NLI selection with a Python scorer, the
//! LLM prompt and parser, gold-label aggregation, metrics and the supervised
//! classifier.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use moralscope_core::corpus::{
    aggregate_item, AggregationConfig, MergedAnnotation, MergedComment, MergedLabel, TieRule,
};
use moralscope_core::metrics::{count_confusions, LabelMetrics, MetricsReport, Prf};
use moralscope_core::nli::{self, NliConfig, NliScorer, ScoreTriple, ScorerError};
use moralscope_core::supervised::{self, ClassifierConfig, ModelArtifact};
use moralscope_core::{
    llm, BackendKind, GoldItem, LabelVector, MoralDimension, SubCorpus, ValueLabel,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_labels(names: &[String]) -> PyResult<LabelVector> {
    let dims = names
        .iter()
        .map(|n| MoralDimension::from_str(n).map_err(value_err))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(LabelVector::from_dimensions(dims))
}

fn parse_corpus(tag: &str) -> PyResult<SubCorpus> {
    SubCorpus::from_str(tag).map_err(value_err)
}

/// Calls `scorer(premises, hypotheses)` and expects one
/// `(entailment, neutral, contradiction)` tuple per pair.
struct PyScorer(Py<PyAny>);

impl NliScorer for PyScorer {
    fn score(
        &self,
        premises: &[&str],
        hypotheses: &[&str],
    ) -> Result<Vec<ScoreTriple>, ScorerError> {
        Python::attach(|py| {
            let out = self
                .0
                .call1(py, (premises.to_vec(), hypotheses.to_vec()))
                .map_err(|e| ScorerError::new(e.to_string()))?;
            let triples: Vec<(f64, f64, f64)> = out
                .extract(py)
                .map_err(|e: PyErr| ScorerError::new(e.to_string()))?;
            triples
                .into_iter()
                .enumerate()
                .map(|(i, (e, n, c))| {
                    ScoreTriple::new(e, n, c).map_err(|err| ScorerError::at(i, err.to_string()))
                })
                .collect()
        })
    }
}

/// The six output labels, in canonical order.
#[pyfunction]
fn labels() -> Vec<&'static str> {
    MoralDimension::ALL.iter().map(|d| d.name()).collect()
}

/// The ten value labels used as NLI hypotheses.
#[pyfunction]
fn value_labels() -> Vec<&'static str> {
    ValueLabel::ALL.iter().map(|v| v.name()).collect()
}

#[pyfunction]
fn hypothesis(label: &str) -> PyResult<String> {
    Ok(nli::build_hypothesis(
        ValueLabel::from_str(label).map_err(value_err)?,
    ))
}

#[pyfunction]
fn normalize_entailment(entailment: f64, neutral: f64, contradiction: f64) -> PyResult<f64> {
    let t = ScoreTriple::new(entailment, neutral, contradiction).map_err(value_err)?;
    nli::normalize_entailment(&t).map_err(value_err)
}

/// Zero-shot classification of each text. Returns `(labels, scores)` pairs
/// where `scores` maps value labels to normalized entailment.
#[pyfunction]
#[pyo3(signature = (texts, scorer, threshold = 0.5, batch_size = 8))]
fn classify_nli(
    py: Python<'_>,
    texts: Vec<String>,
    scorer: Py<PyAny>,
    threshold: f64,
    batch_size: usize,
) -> PyResult<Vec<(Vec<&'static str>, Vec<(&'static str, f64)>)>> {
    let config = NliConfig {
        threshold,
        batch_size,
        ..NliConfig::default()
    };
    let scorer = PyScorer(scorer);
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    // Worker threads re-attach to call the scorer.
    let results = py.detach(|| nli::classify_batch(&refs, &scorer, &config));
    results
        .into_iter()
        .map(|r| {
            let set = r.map_err(value_err)?;
            let scores = match set.scores {
                Some(moralscope_core::LabelScores::PerValue(m)) => {
                    m.into_iter().map(|(k, v)| (k.name(), v)).collect()
                }
                _ => Vec::new(),
            };
            Ok((set.labels.names(), scores))
        })
        .collect()
}

#[pyfunction]
fn build_prompt(text: &str) -> PyResult<String> {
    llm::build_prompt(text).map_err(value_err)
}

/// Labels named by a completion; raises ValueError when none can be read.
#[pyfunction]
fn parse_response(completion: &str) -> PyResult<Vec<&'static str>> {
    llm::parse_response(completion)
        .map(|p| p.labels.names())
        .map_err(value_err)
}

/// Majority vote over annotators' label sets (value labels such as "Harm",
/// or "Non-moral"). Returns the gold labels, or None when no label reaches
/// the threshold.
#[pyfunction]
#[pyo3(signature = (annotations, threshold = 0.5, tie_rule = "dimension_wins"))]
fn aggregate(
    annotations: Vec<Vec<String>>,
    threshold: f64,
    tie_rule: &str,
) -> PyResult<Option<Vec<&'static str>>> {
    let tie_rule = match tie_rule {
        "dimension_wins" => TieRule::DimensionWins,
        "non_moral_wins" => TieRule::NonMoralWins,
        other => return Err(value_err(format!("unknown tie rule `{other}`"))),
    };
    let merged = annotations
        .iter()
        .enumerate()
        .map(|(i, labels)| {
            let labels = labels
                .iter()
                .map(|l| match MoralDimension::from_str(l) {
                    Ok(MoralDimension::NonMoral) => Ok(MergedLabel::NonMoral),
                    _ => ValueLabel::from_str(l)
                        .map(MergedLabel::Value)
                        .map_err(value_err),
                })
                .collect::<PyResult<BTreeSet<_>>>()?;
            Ok(MergedAnnotation {
                annotator_id: i.to_string(),
                labels,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let comment = MergedComment {
        id: "item".into(),
        text: "item".into(),
        subcorpus: SubCorpus::A,
        annotations: merged,
    };
    let config = AggregationConfig {
        threshold,
        tie_rule,
    };
    Ok(aggregate_item(&comment, &config)
        .ok()
        .map(|g| g.gold.names()))
}

fn prf_dict<'py>(py: Python<'py>, p: &Prf) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("precision", p.precision)?;
    d.set_item("recall", p.recall)?;
    d.set_item("f1", p.f1)?;
    Ok(d)
}

fn label_dict<'py>(py: Python<'py>, m: &LabelMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("support", m.support)?;
    Ok(d)
}

/// Weighted, micro and macro P/R/F1 plus per-label metrics for aligned lists
/// of predicted and gold label names.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    predictions: Vec<Vec<String>>,
    golds: Vec<Vec<String>>,
) -> PyResult<Bound<'py, PyDict>> {
    if predictions.len() != golds.len() {
        return Err(value_err(format!(
            "{} predictions but {} gold items",
            predictions.len(),
            golds.len()
        )));
    }
    let ids: Vec<String> = (0..golds.len()).map(|i| i.to_string()).collect();
    let to_pairs = |rows: &[Vec<String>]| -> PyResult<Vec<(&str, LabelVector)>> {
        ids.iter()
            .zip(rows)
            .map(|(id, r)| Ok((id.as_str(), parse_labels(r)?)))
            .collect()
    };
    let counts =
        count_confusions(&to_pairs(&predictions)?, &to_pairs(&golds)?).map_err(value_err)?;
    let report =
        MetricsReport::from_counts(BackendKind::Nli, None, SubCorpus::A, counts, ids.len(), 0)
            .map_err(value_err)?;

    let out = PyDict::new(py);
    out.set_item("weighted", prf_dict(py, &report.weighted)?)?;
    out.set_item("micro", prf_dict(py, &report.micro)?)?;
    out.set_item("macro", prf_dict(py, &report.macro_)?)?;
    let per = PyDict::new(py);
    for (dim, m) in &report.per_label {
        per.set_item(dim.name(), label_dict(py, m)?)?;
    }
    out.set_item("per_label", per)?;
    Ok(out)
}

/// A trained multi-label classifier.
#[pyclass(name = "SupervisedModel")]
struct PySupervisedModel(ModelArtifact);

#[pymethods]
impl PySupervisedModel {
    /// Trains on parallel lists of texts and gold label names from one
    /// sub-corpus.
    #[staticmethod]
    #[pyo3(signature = (texts, golds, train_corpus, epochs = 5, learning_rate = 1e-5, seed = 0, encoder = "hashing:4096"))]
    fn train(
        py: Python<'_>,
        texts: Vec<String>,
        golds: Vec<Vec<String>>,
        train_corpus: &str,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
        encoder: &str,
    ) -> PyResult<Self> {
        if texts.len() != golds.len() {
            return Err(value_err("texts and golds differ in length"));
        }
        let corpus = parse_corpus(train_corpus)?;
        let items = texts
            .into_iter()
            .zip(&golds)
            .enumerate()
            .map(|(i, (text, g))| {
                Ok(GoldItem {
                    id: format!("{i:08}"),
                    text,
                    subcorpus: corpus,
                    gold: parse_labels(g)?,
                    annotator_count: 2,
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let config = ClassifierConfig {
            epochs,
            learning_rate,
            seed,
            encoder: encoder.to_string(),
            ..ClassifierConfig::default()
        };
        let artifact = py
            .detach(|| {
                supervised::build_classifier(&config).and_then(|m| supervised::train(m, &items))
            })
            .map_err(value_err)?;
        Ok(PySupervisedModel(artifact))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        ModelArtifact::load(&path)
            .map(PySupervisedModel)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0
            .save(&path)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn train_corpus(&self) -> &'static str {
        self.0.train_corpus.tag()
    }

    /// Mean training loss per epoch.
    #[getter]
    fn epoch_losses(&self) -> Vec<f64> {
        self.0.log.epoch_losses()
    }

    /// Per-label probabilities in canonical label order.
    fn probabilities(&self, text: &str) -> Vec<f64> {
        self.0.classifier.probabilities(text).to_vec()
    }

    fn predict(&self, text: &str) -> Vec<&'static str> {
        self.0.predict(text).labels.names()
    }

    fn predict_many<'py>(
        &self,
        py: Python<'py>,
        texts: Vec<String>,
    ) -> PyResult<Bound<'py, PyList>> {
        let preds: Vec<Vec<&'static str>> = py.detach(|| {
            texts
                .iter()
                .map(|t| self.0.predict(t).labels.names())
                .collect()
        });
        PyList::new(py, preds)
    }

    fn __repr__(&self) -> String {
        format!(
            "SupervisedModel(train_corpus={:?})",
            self.0.train_corpus.tag()
        )
    }
}

#[pymodule]
fn moralscope(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(labels, m)?)?;
    m.add_function(wrap_pyfunction!(value_labels, m)?)?;
    m.add_function(wrap_pyfunction!(hypothesis, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_entailment, m)?)?;
    m.add_function(wrap_pyfunction!(classify_nli, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(parse_response, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_class::<PySupervisedModel>()?;
    m.add("THRESHOLD", supervised::THRESHOLD)?;
    Ok(())
}
