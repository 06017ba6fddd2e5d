use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use moralscope_core::corpus::{
    load_corpus_path, write_gold_items, AggregationConfig, Manifest, TieRule,
};
use moralscope_core::SubCorpus;

use crate::context::{usage, write_file, Ctx};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Raw annotation table (CSV).
    #[arg(long)]
    raw: Option<PathBuf>,
    /// Column and value mapping (TOML); the MFRC release mapping by default.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    tie_rule: Option<TieRuleArg>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum TieRuleArg {
    DimensionWins,
    NonMoralWins,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let section = &ctx.config.prepare;
    let raw = args
        .raw
        .or_else(|| section.raw.clone())
        .ok_or_else(|| usage("no raw corpus given (--raw or [prepare] raw)"))?;
    let raw = ctx.input(&raw)?;
    let manifest = match args.manifest.or_else(|| section.manifest.clone()) {
        Some(p) => {
            let path = ctx.input(&p)?;
            Manifest::from_path(&path)
                .map_err(|e| usage(format!("manifest {}: {e}", path.display())))?
        }
        None => Manifest::mfrc_release(),
    };
    let tie_rule = match args.tie_rule {
        Some(TieRuleArg::DimensionWins) => TieRule::DimensionWins,
        Some(TieRuleArg::NonMoralWins) => TieRule::NonMoralWins,
        None => section.tie_rule,
    };
    let config = AggregationConfig {
        threshold: section.threshold,
        tie_rule,
    };

    let prepared = load_corpus_path(&raw, &manifest, &config)
        .with_context(|| format!("preparing {}", raw.display()))?;

    for sc in SubCorpus::ALL {
        let path = ctx.output(format!("prepared/{}.jsonl", sc.tag()))?;
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_gold_items(BufWriter::new(file), prepared.get(sc))?;
    }
    let distribution = prepared.distribution();
    write_file(
        &ctx.output("prepared/distribution.tsv")?,
        distribution.to_tsv(),
    )?;

    let mut discards = String::from("subcorpus\tid\treason\n");
    for d in &prepared.discards {
        let _ = writeln!(discards, "{}\t{}\t{}", d.subcorpus, d.id, d.reason.code());
    }
    write_file(&ctx.output("prepared/discards.tsv")?, discards)?;

    let deltas = distribution.deltas();
    let mut delta_tsv = String::from("subcorpus\trow\tobserved\treference\tdelta\n");
    for d in &deltas {
        let _ = writeln!(
            delta_tsv,
            "{}\t{}\t{}\t{}\t{}",
            d.subcorpus, d.row, d.observed, d.reference, d.delta
        );
    }
    write_file(&ctx.output("prepared/distribution_delta.tsv")?, delta_tsv)?;

    print!("{}", distribution.render_grid());
    println!(
        "\n{} comments, {} gold items, {} discarded, {} duplicate rows skipped",
        prepared.input_comments,
        prepared.total_items(),
        prepared.discards.len(),
        prepared.duplicate_rows
    );
    let differing = deltas.iter().filter(|d| d.delta != 0).count();
    if differing > 0 {
        println!("{differing} rows differ from the reference distribution; see prepared/distribution_delta.tsv");
    }
    Ok(())
}
