use std::fs;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use moralscope_core::jsonl;
use moralscope_core::metrics::{render_report, summary_rows, MetricsReport};

use crate::context::{write_file, Ctx};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory of *.metrics.json files; defaults to reports/ under the output root.
    #[arg(long)]
    reports: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: Args) -> Result<()> {
    let dir = match args.reports {
        Some(p) => ctx.input(&p)?,
        None => ctx.out.join("reports"),
    };
    let mut paths: Vec<PathBuf> = match fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".metrics.json"))
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();

    let mut reports = Vec::with_capacity(paths.len());
    for p in &paths {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let r: MetricsReport =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        reports.push(r);
    }
    if reports.is_empty() {
        println!(
            "no evaluation reports found in {}; nothing to render",
            dir.display()
        );
        return Ok(());
    }

    for table in render_report(&reports) {
        write_file(
            &ctx.output(format!("tables/{}.tsv", table.file_stem))?,
            &table.tsv,
        )?;
        write_file(
            &ctx.output(format!("tables/{}.txt", table.file_stem))?,
            &table.grid,
        )?;
        println!("{}\n\n{}", table.name, table.grid);
    }
    let summary = ctx.output("tables/summary.jsonl")?;
    let file =
        fs::File::create(&summary).with_context(|| format!("creating {}", summary.display()))?;
    jsonl::write_records(std::io::BufWriter::new(file), &summary_rows(&reports))?;
    println!(
        "{} reports rendered into {}",
        reports.len(),
        ctx.out.join("tables").display()
    );
    Ok(())
}
