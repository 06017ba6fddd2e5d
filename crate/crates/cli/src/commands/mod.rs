pub mod classify;
pub mod evaluate;
pub mod prepare;
pub mod report;
pub mod train;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context as _, Result};
use moralscope_core::corpus::read_gold_items;
use moralscope_core::{GoldItem, SubCorpus};

pub fn read_gold(path: &Path) -> Result<Vec<GoldItem>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_gold_items(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// The single sub-corpus all items belong to.
pub fn corpus_of(items: &[GoldItem], path: &Path) -> Result<SubCorpus> {
    let Some(first) = items.first() else {
        bail!("{} contains no items", path.display());
    };
    if let Some(other) = items.iter().find(|i| i.subcorpus != first.subcorpus) {
        bail!(
            "{} mixes sub-corpora {} and {} (item {})",
            path.display(),
            first.subcorpus,
            other.subcorpus,
            other.id
        );
    }
    Ok(first.subcorpus)
}
