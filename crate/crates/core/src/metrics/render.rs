//! Result tables: models as rows, evaluation corpora as columns.
//!
//! Cells show two decimals. Within each column the best unsupervised value is
//! marked `*x*` and the best supervised value `_x_`; ties are all marked. A
//! supervised model's own training corpus shows `-`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::MetricsReport;
use crate::corpus::SubCorpus;
use crate::prediction::BackendKind;
use crate::taxonomy::MoralDimension;

/// Identifies a table row: a backend, plus its training corpus if supervised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelKey {
    pub backend: BackendKind,
    pub train_corpus: Option<SubCorpus>,
}

impl ModelKey {
    pub fn is_supervised(&self) -> bool {
        self.backend == BackendKind::Supervised
    }

    fn rank(&self) -> (u8, Option<SubCorpus>) {
        let b = match self.backend {
            BackendKind::Llm => 0,
            BackendKind::Nli => 1,
            BackendKind::Supervised => 2,
        };
        (b, self.train_corpus)
    }
}

impl PartialOrd for ModelKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ModelKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl fmt::Display for ModelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.backend, self.train_corpus) {
            (BackendKind::Llm, _) => f.write_str("LLM"),
            (BackendKind::Nli, _) => f.write_str("NLI"),
            (BackendKind::Supervised, Some(sc)) => write!(f, "{}-classifier", sc.tag()),
            (BackendKind::Supervised, None) => f.write_str("classifier"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedTable {
    pub name: String,
    /// Suggested file name without extension.
    pub file_stem: String,
    pub tsv: String,
    pub grid: String,
}

/// Per-label tables in the order they are emitted after the overall table.
pub const LABEL_TABLE_ORDER: [MoralDimension; 6] = [
    MoralDimension::CareHarm,
    MoralDimension::FairnessCheating,
    MoralDimension::PurityDegradation,
    MoralDimension::LoyaltyBetrayal,
    MoralDimension::AuthoritySubversion,
    MoralDimension::NonMoral,
];

enum Cell {
    Value(f64),
    Trained,
    Missing,
}

struct Layout<'a> {
    models: Vec<ModelKey>,
    corpora: Vec<SubCorpus>,
    lookup: BTreeMap<(ModelKey, SubCorpus), &'a MetricsReport>,
}

impl<'a> Layout<'a> {
    fn new(reports: &'a [MetricsReport]) -> Self {
        let models: BTreeSet<ModelKey> = reports.iter().map(|r| r.model()).collect();
        let corpora: BTreeSet<SubCorpus> = reports.iter().map(|r| r.eval_corpus).collect();
        // A later report for the same cell replaces an earlier one.
        let lookup = reports
            .iter()
            .map(|r| ((r.model(), r.eval_corpus), r))
            .collect();
        Layout {
            models: models.into_iter().collect(),
            corpora: corpora.into_iter().collect(),
            lookup,
        }
    }

    fn column(&self, corpus: SubCorpus, metric: &dyn Fn(&MetricsReport) -> f64) -> Vec<Cell> {
        self.models
            .iter()
            .map(|m| {
                if m.train_corpus == Some(corpus) {
                    Cell::Trained
                } else {
                    match self.lookup.get(&(*m, corpus)) {
                        Some(r) => Cell::Value(metric(r)),
                        None => Cell::Missing,
                    }
                }
            })
            .collect()
    }

    /// Formatted cells for one column, with best values marked per group.
    fn marked_column(
        &self,
        corpus: SubCorpus,
        metric: &dyn Fn(&MetricsReport) -> f64,
    ) -> Vec<String> {
        let cells = self.column(corpus, metric);
        let rounded = |v: f64| (v * 100.0).round() as i64;
        let best = |supervised: bool| {
            self.models
                .iter()
                .zip(&cells)
                .filter(|(m, _)| m.is_supervised() == supervised)
                .filter_map(|(_, c)| match c {
                    Cell::Value(v) => Some(rounded(*v)),
                    _ => None,
                })
                .max()
        };
        let best_unsup = best(false);
        let best_sup = best(true);
        self.models
            .iter()
            .zip(&cells)
            .map(|(m, c)| match c {
                Cell::Trained => "-".to_string(),
                Cell::Missing => String::new(),
                Cell::Value(v) => {
                    let text = format!("{v:.2}");
                    let is_best = if m.is_supervised() {
                        best_sup
                    } else {
                        best_unsup
                    };
                    match (is_best == Some(rounded(*v)), m.is_supervised()) {
                        (true, false) => format!("*{text}*"),
                        (true, true) => format!("_{text}_"),
                        (false, _) => text,
                    }
                }
            })
            .collect()
    }
}

fn grid(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            rows.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths.iter().chain(std::iter::repeat(&0)))
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    let total: usize = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
    line(header);
    line(&["-".repeat(total)]);
    for r in rows {
        line(r);
    }
    s
}

fn tsv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = header.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}

fn corpus_headers(layout: &Layout) -> Vec<String> {
    layout
        .corpora
        .iter()
        .map(|c| format!("Corpus {}", c.tag()))
        .collect()
}

fn overall_table(layout: &Layout) -> RenderedTable {
    let metrics: [(&str, fn(&MetricsReport) -> f64); 3] = [
        ("Precision", |r| r.weighted.precision),
        ("Recall", |r| r.weighted.recall),
        ("F1", |r| r.weighted.f1),
    ];
    let columns: Vec<[Vec<String>; 3]> = layout
        .corpora
        .iter()
        .map(|c| metrics.map(|(_, f)| layout.marked_column(*c, &f)))
        .collect();
    let mut rows = Vec::new();
    for (mi, model) in layout.models.iter().enumerate() {
        for (k, (name, _)) in metrics.iter().enumerate() {
            let mut row = vec![model.to_string(), name.to_string()];
            row.extend(columns.iter().map(|col| col[k][mi].clone()));
            rows.push(row);
        }
    }
    let mut header = vec!["Model".to_string(), "Metric".to_string()];
    header.extend(corpus_headers(layout));
    RenderedTable {
        name: "Overall weighted precision, recall and F1".into(),
        file_stem: "overall".into(),
        tsv: tsv(&header, &rows),
        grid: grid(&header, &rows),
    }
}

fn label_table(layout: &Layout, label: MoralDimension) -> RenderedTable {
    let metric = move |r: &MetricsReport| r.per_label.get(&label).map_or(0.0, |m| m.f1);
    let columns: Vec<Vec<String>> = layout
        .corpora
        .iter()
        .map(|c| layout.marked_column(*c, &metric))
        .collect();
    let rows: Vec<Vec<String>> = layout
        .models
        .iter()
        .enumerate()
        .map(|(mi, model)| {
            let mut row = vec![model.to_string()];
            row.extend(columns.iter().map(|col| col[mi].clone()));
            row
        })
        .collect();
    let mut header = vec!["Model".to_string()];
    header.extend(corpus_headers(layout));
    RenderedTable {
        name: format!("{} F1", label.name()),
        file_stem: format!("f1_{}", label.name().to_lowercase().replace('-', "_")),
        tsv: tsv(&header, &rows),
        grid: grid(&header, &rows),
    }
}

/// Renders the overall table followed by one F1 table per label.
/// Returns nothing for an empty input.
pub fn render_report(reports: &[MetricsReport]) -> Vec<RenderedTable> {
    if reports.is_empty() {
        return Vec::new();
    }
    let layout = Layout::new(reports);
    let mut tables = vec![overall_table(&layout)];
    tables.extend(LABEL_TABLE_ORDER.iter().map(|l| label_table(&layout, *l)));
    tables
}

/// One line of the combined summary file. `label` is a label name or
/// `"weighted"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub backend: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_corpus: Option<SubCorpus>,
    pub eval_corpus: SubCorpus,
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<usize>,
}

/// Full-precision rows keyed by (backend, train corpus, eval corpus, label).
pub fn summary_rows(reports: &[MetricsReport]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&MetricsReport> = reports.iter().collect();
    sorted.sort_by_key(|r| (r.model(), r.eval_corpus));
    let mut rows = Vec::new();
    for r in sorted {
        let base = |label: &str, p: f64, rc: f64, f: f64, support| SummaryRow {
            backend: r.backend,
            train_corpus: r.train_corpus,
            eval_corpus: r.eval_corpus,
            label: label.to_string(),
            precision: p,
            recall: rc,
            f1: f,
            support,
        };
        rows.push(base(
            "weighted",
            r.weighted.precision,
            r.weighted.recall,
            r.weighted.f1,
            None,
        ));
        for (dim, m) in &r.per_label {
            rows.push(base(
                dim.name(),
                m.precision,
                m.recall,
                m.f1,
                Some(m.support),
            ));
        }
    }
    rows
}
