use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context as _, Result};
use moralscope_core::jsonl;
use moralscope_core::llm::{
    classify_batch_llm, AuditRecord, CompletionClient, HttpCompletionClient, LlmOutcome,
    ReplayClient,
};
use moralscope_core::nli::{classify_batch, HttpScorer, LexiconScorer, NliScorer, ScoreTable};
use moralscope_core::supervised::ModelArtifact;
use moralscope_core::{BackendKind, GoldItem, PredictionRecord, PredictionStatus, SubCorpus};

use super::{corpus_of, read_gold};
use crate::context::{usage, Ctx};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// nli, llm or supervised.
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Prepared sub-corpus file (JSONL).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Prediction file; defaults to predictions/<model>_<corpus>.jsonl under the output root.
    #[arg(long)]
    output: Option<PathBuf>,
    /// NLI scorer: lexicon, table:<path> or http:<url>.
    #[arg(long)]
    scorer: Option<String>,
    /// NLI selection threshold on the normalized entailment score.
    #[arg(long)]
    threshold: Option<f64>,
    /// LLM client: http, or replay:<path> with recorded completions.
    #[arg(long)]
    client: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Trained model directory for the supervised backend.
    #[arg(long)]
    artifact: Option<PathBuf>,
    /// Permit evaluating a classifier on its own training corpus.
    #[arg(long)]
    allow_in_domain: bool,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let section = &ctx.config.classify;
    let backend = args
        .backend
        .or(section.backend)
        .ok_or_else(|| usage("no backend given (--backend or [classify] backend)"))?;
    let corpus_path = args
        .corpus
        .clone()
        .or_else(|| section.corpus.clone())
        .ok_or_else(|| usage("no corpus given (--corpus or [classify] corpus)"))?;
    let corpus_path = ctx.input(&corpus_path)?;
    let items = read_gold(&corpus_path)?;
    let corpus = corpus_of(&items, &corpus_path)?;
    let output = args.output.clone().or_else(|| section.output.clone());

    let (model_name, records) = match backend {
        BackendKind::Nli => ("nli".to_string(), run_nli(ctx, &args, &items)?),
        BackendKind::Llm => {
            let stem = format!("llm_{corpus}");
            let audit_path = match &output {
                Some(p) => ctx.workdir.join(p).with_extension("audit.jsonl"),
                None => ctx.output(format!("predictions/{stem}.audit.jsonl"))?,
            };
            ("llm".to_string(), run_llm(ctx, &args, &items, &audit_path)?)
        }
        BackendKind::Supervised => {
            let (name, recs) = run_supervised(ctx, &args, &items, corpus)?;
            (name, recs)
        }
    };

    let path = ctx.output_or(
        output.as_deref(),
        format!("predictions/{model_name}_{corpus}.jsonl"),
    )?;
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    jsonl::write_records(BufWriter::new(file), &records)?;

    let failed = records
        .iter()
        .filter(|r| r.status != PredictionStatus::Labeled)
        .count();
    println!(
        "{} predictions written to {}",
        records.len(),
        path.display()
    );
    if failed > 0 {
        eprintln!("{failed} items have no usable prediction (see the `status` and `error` fields)");
    }
    Ok(())
}

fn make_scorer(ctx: &Ctx, spec: &str) -> Result<Box<dyn NliScorer>> {
    if spec == "lexicon" {
        return Ok(Box::new(LexiconScorer::default()));
    }
    if let Some(path) = spec.strip_prefix("table:") {
        let path = ctx.input(Path::new(path))?;
        let table =
            ScoreTable::open(&path).with_context(|| format!("loading {}", path.display()))?;
        return Ok(Box::new(table));
    }
    if let Some(url) = spec.strip_prefix("http:") {
        let url = if url.starts_with("//") {
            format!("http:{url}")
        } else {
            url.to_string()
        };
        return Ok(Box::new(HttpScorer::new(url, Duration::from_secs(120))));
    }
    Err(usage(format!(
        "unknown scorer `{spec}` (expected lexicon, table:<path> or http:<url>)"
    )))
}

fn run_nli(ctx: &Ctx, args: &Args, items: &[GoldItem]) -> Result<Vec<PredictionRecord>> {
    let section = &ctx.config.nli;
    let scorer = make_scorer(ctx, args.scorer.as_deref().unwrap_or(&section.scorer))?;
    let mut config = section.settings.clone();
    if let Some(t) = args.threshold {
        config.threshold = t;
    }
    let texts: Vec<&str> = items.iter().map(|i| i.text.as_str()).collect();
    let results = classify_batch(&texts, scorer.as_ref(), &config);
    let mut records: Vec<PredictionRecord> = items
        .iter()
        .zip(results)
        .map(|(item, r)| match r {
            Ok(set) => PredictionRecord::labeled(&item.id, BackendKind::Nli, set),
            Err(e) => {
                log::warn!("item {}: {e}", item.id);
                PredictionRecord::unlabeled(
                    &item.id,
                    BackendKind::Nli,
                    PredictionStatus::Failed,
                    e.to_string(),
                )
            }
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(records)
}

fn run_llm(
    ctx: &Ctx,
    args: &Args,
    items: &[GoldItem],
    audit_path: &Path,
) -> Result<Vec<PredictionRecord>> {
    let section = &ctx.config.llm;
    let mut config = section.settings.clone();
    if let Some(m) = &args.model {
        config.model = m.clone();
    }
    if let Some(e) = &args.endpoint {
        config.endpoint = e.clone();
    }
    if let Some(r) = args.max_retries {
        config.max_retries = r;
    }
    if let Some(p) = args.parallelism {
        config.parallelism = p;
    }
    if let Some(t) = args.temperature {
        config.temperature = t;
    }
    config.validate().map_err(|e| usage(e.to_string()))?;

    let spec = args.client.as_deref().unwrap_or(&section.client);
    let client: Box<dyn CompletionClient> = if spec == "http" {
        Box::new(HttpCompletionClient::from_config(&config))
    } else if let Some(path) = spec.strip_prefix("replay:") {
        let path = ctx.input(Path::new(path))?;
        let file = File::open(&path)?;
        let audit: Vec<AuditRecord> = jsonl::read_records(BufReader::new(file))
            .with_context(|| format!("reading {}", path.display()))?;
        Box::new(ReplayClient::from_audit(&audit))
    } else {
        return Err(usage(format!(
            "unknown LLM client `{spec}` (expected http or replay:<path>)"
        )));
    };

    let pairs: Vec<(&str, &str)> = items
        .iter()
        .map(|i| (i.id.as_str(), i.text.as_str()))
        .collect();
    let results = classify_batch_llm(&pairs, client.as_ref(), &config)?;

    let audit: Vec<AuditRecord> = results
        .iter()
        .flat_map(|r| r.audit.iter().cloned())
        .collect();
    let file =
        File::create(audit_path).with_context(|| format!("creating {}", audit_path.display()))?;
    jsonl::write_records(BufWriter::new(file), &audit)?;

    Ok(results
        .into_iter()
        .map(|r| match r.outcome {
            LlmOutcome::Labeled { prediction } => {
                PredictionRecord::labeled(r.item_id, BackendKind::Llm, prediction)
            }
            LlmOutcome::Unparsed { completion } => PredictionRecord::unlabeled(
                r.item_id,
                BackendKind::Llm,
                PredictionStatus::Unparsed,
                format!("unparsed completion: {completion:?}"),
            ),
            LlmOutcome::Failed { error } => PredictionRecord::unlabeled(
                r.item_id,
                BackendKind::Llm,
                PredictionStatus::Failed,
                error,
            ),
        })
        .collect())
}

fn run_supervised(
    ctx: &Ctx,
    args: &Args,
    items: &[GoldItem],
    corpus: SubCorpus,
) -> Result<(String, Vec<PredictionRecord>)> {
    let section = &ctx.config.supervised;
    let dir = args
        .artifact
        .clone()
        .or_else(|| section.artifact.clone())
        .ok_or_else(|| usage("no model given (--artifact or [supervised] artifact)"))?;
    let dir = ctx.input(&dir)?;
    let artifact =
        ModelArtifact::load(&dir).with_context(|| format!("loading model {}", dir.display()))?;
    if artifact.train_corpus == corpus && !(args.allow_in_domain || section.allow_in_domain) {
        return Err(usage(format!(
            "model {} was trained on corpus {corpus}; cross-domain evaluation uses the other \
             corpora (pass --allow-in-domain to override)",
            dir.display()
        )));
    }
    // Keep training items out of the evaluation input.
    let train_file = ctx
        .out
        .join(format!("prepared/{}.jsonl", artifact.train_corpus));
    let kept: Vec<GoldItem> = if artifact.train_corpus != corpus && train_file.exists() {
        let train_ids: HashSet<String> =
            read_gold(&train_file)?.into_iter().map(|i| i.id).collect();
        let kept: Vec<GoldItem> = items
            .iter()
            .filter(|i| !train_ids.contains(&i.id))
            .cloned()
            .collect();
        if kept.len() < items.len() {
            log::warn!(
                "{} items also occur in training corpus {}; left out",
                items.len() - kept.len(),
                artifact.train_corpus
            );
        }
        kept
    } else {
        items.to_vec()
    };
    let name = format!("{}-classifier", artifact.train_corpus);
    Ok((name, artifact.predict_items(&kept)))
}
