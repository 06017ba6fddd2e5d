use std::path::PathBuf;

use anyhow::{Context as _, Result};
use moralscope_core::supervised::{build_classifier, train, SupervisedError};
use moralscope_core::SubCorpus;

use super::{corpus_of, read_gold};
use crate::context::{usage, Ctx};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Sub-corpus to train on.
    #[arg(long)]
    train_corpus: Option<SubCorpus>,
    /// Prepared training file; defaults to prepared/<tag>.jsonl under the output root.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Encoder identifier, e.g. hashing:4096.
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Model directory; defaults to models/<tag>-classifier under the output root.
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let section = &ctx.config.supervised;
    let tag = args.train_corpus.or(section.train_corpus).ok_or_else(|| {
        usage("no training corpus given (--train-corpus or [supervised] train_corpus)")
    })?;
    let corpus_path = match args.corpus.or_else(|| section.corpus.clone()) {
        Some(p) => ctx.input(&p)?,
        None => {
            let p = ctx.out.join(format!("prepared/{tag}.jsonl"));
            if !p.exists() {
                return Err(usage(format!(
                    "{} does not exist; run `prepare` first or pass --corpus",
                    p.display()
                )));
            }
            p
        }
    };
    let items = read_gold(&corpus_path)?;
    let found = corpus_of(&items, &corpus_path)?;
    if found != tag {
        return Err(usage(format!(
            "{} holds corpus {found}, not {tag}",
            corpus_path.display()
        )));
    }

    let mut config = section.classifier.clone();
    config.seed = args.seed.unwrap_or(ctx.config.seed);
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    if let Some(e) = args.encoder {
        config.encoder = e;
    }
    if let Some(lr) = args.learning_rate {
        config.learning_rate = lr;
    }
    let model = build_classifier(&config).map_err(|e| match e {
        SupervisedError::InvalidConfig(_) | SupervisedError::UnresolvableEncoder(_) => {
            usage(e.to_string())
        }
        other => other.into(),
    })?;

    let dir = ctx.output_or(args.output.as_deref(), format!("models/{tag}-classifier"))?;
    if dir.join("params.bin").exists() {
        return Err(usage(format!("{} already holds a model", dir.display())));
    }
    let artifact = train(model, &items).context("training failed")?;
    artifact.save(&dir)?;

    for e in &artifact.log.epochs {
        println!("epoch {}\tmean loss {:.6}", e.epoch, e.mean_loss);
    }
    println!("model written to {}", dir.display());
    Ok(())
}
