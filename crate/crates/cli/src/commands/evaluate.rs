use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use moralscope_core::metrics::{evaluate, EvalOptions, MetricsReport};
use moralscope_core::{BackendKind, GoldItem, MoralDimension, PredictionRecord, PredictionSet};

use super::{corpus_of, read_gold};
use crate::context::{usage, write_file, Ctx};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Prediction file (JSONL). A gold file is accepted too.
    #[arg(long)]
    predictions: PathBuf,
    /// Gold file of one prepared sub-corpus.
    #[arg(long)]
    gold: PathBuf,
    /// Backend tag for records read from a gold file.
    #[arg(long, default_value = "nli")]
    as_backend: BackendKind,
    /// Score unparsed or failed items as Non-moral instead of leaving them out.
    #[arg(long)]
    unparsed_as_non_moral: bool,
    /// Report file; defaults to reports/<prediction stem>.metrics.json under the output root.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Reads prediction records, or gold items turned into perfect predictions.
fn read_predictions(path: &Path, as_backend: BackendKind) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut records = Vec::new();
    for (n, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let value: serde_json::Value = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", path.display(), n + 1))?;
        let record = if value.get("gold").is_some() {
            let item: GoldItem = serde_json::from_value(value)
                .with_context(|| format!("{} line {}", path.display(), n + 1))?;
            PredictionRecord::labeled(item.id, as_backend, PredictionSet::new(item.gold))
        } else {
            serde_json::from_value(value)
                .with_context(|| format!("{} line {}", path.display(), n + 1))?
        };
        records.push(record);
    }
    Ok(records)
}

pub fn render_grid(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10}{:>10}{:>10}{:>10}{:>10}",
        "label", "precision", "recall", "f1", "support"
    );
    let _ = writeln!(s, "{}", "-".repeat(50));
    for dim in MoralDimension::ALL {
        let m = &report.per_label[&dim];
        let flag = if m.no_support { " (no support)" } else { "" };
        let _ = writeln!(
            s,
            "{:<10}{:>10.2}{:>10.2}{:>10.2}{:>10}{flag}",
            dim.name(),
            m.precision,
            m.recall,
            m.f1,
            m.support
        );
    }
    let w = &report.weighted;
    let _ = writeln!(
        s,
        "{:<10}{:>10.2}{:>10.2}{:>10.2}{:>10}",
        "weighted",
        w.precision,
        w.recall,
        w.f1,
        report.counts.total_support()
    );
    s
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let pred_path = ctx.input(&args.predictions)?;
    let gold_path = ctx.input(&args.gold)?;
    let predictions = read_predictions(&pred_path, args.as_backend)?;
    let golds = read_gold(&gold_path)?;
    let corpus = corpus_of(&golds, &gold_path)?;
    if predictions.first().and_then(|p| p.train_corpus) == Some(corpus) {
        log::warn!("evaluating a classifier on its own training corpus {corpus}");
    }
    let options = EvalOptions {
        unparsed_as_non_moral: args.unparsed_as_non_moral
            || ctx.config.evaluate.unparsed_as_non_moral,
    };
    let report = evaluate(&predictions, &golds, corpus, options)
        .map_err(|e| usage(format!("{}: {e}", pred_path.display())))?;

    let stem = pred_path
        .file_name()
        .and_then(|n| n.to_str())
        .map(|n| n.trim_end_matches(".jsonl"))
        .unwrap_or("predictions");
    let out = ctx.output_or(
        args.output.as_deref(),
        format!("reports/{stem}.metrics.json"),
    )?;
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    write_file(&out, json)?;

    print!("{}", render_grid(&report));
    if report.unparsed_count > 0 {
        println!(
            "{} items without a usable prediction were left out",
            report.unparsed_count
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}
