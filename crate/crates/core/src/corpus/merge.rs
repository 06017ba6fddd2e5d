use std::collections::{BTreeMap, BTreeSet};

use super::{CorpusError, MergedLabel};
use crate::taxonomy::ValueLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mapping {
    To(MergedLabel),
    Drop,
}

/// Raw label vocabulary of an annotation release, keyed case-insensitively.
#[derive(Debug, Clone)]
pub struct LabelVocabulary {
    entries: BTreeMap<String, Mapping>,
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        Self::with_non_moral_markers(["Non-Moral"])
    }
}

impl LabelVocabulary {
    /// The release vocabulary: every value label by name, `Equality` and
    /// `Proportionality` folded into Fairness, `Thin Morality` dropped, plus
    /// the given non-moral markers.
    pub fn with_non_moral_markers<I, S>(markers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for label in ValueLabel::ALL {
            entries.insert(key(label.name()), Mapping::To(MergedLabel::Value(label)));
        }
        let fairness = Mapping::To(MergedLabel::Value(ValueLabel::Fairness));
        entries.insert(key("Equality"), fairness);
        entries.insert(key("Proportionality"), fairness);
        entries.insert(key("Thin Morality"), Mapping::Drop);
        for m in markers {
            entries.insert(key(m.as_ref()), Mapping::To(MergedLabel::NonMoral));
        }
        LabelVocabulary { entries }
    }

    /// Adds an alias for a label already in the vocabulary.
    pub fn add_alias(&mut self, alias: &str, target: &str) -> Result<(), CorpusError> {
        let mapping = *self.entries.get(&key(target)).ok_or_else(|| {
            CorpusError::Manifest(format!("alias `{alias}` targets unknown label `{target}`"))
        })?;
        self.entries.insert(key(alias), mapping);
        Ok(())
    }

    fn lookup(&self, raw: &str) -> Option<Mapping> {
        self.entries.get(&key(raw)).copied()
    }
}

fn key(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Maps a raw label set onto the taxonomy.
///
/// Unknown labels are an error naming the offending string.
pub fn merge_raw_labels<S: AsRef<str>>(
    raw: &[S],
    vocabulary: &LabelVocabulary,
) -> Result<BTreeSet<MergedLabel>, CorpusError> {
    let mut out = BTreeSet::new();
    for label in raw {
        let label = label.as_ref();
        match vocabulary.lookup(label) {
            Some(Mapping::To(m)) => {
                out.insert(m);
            }
            Some(Mapping::Drop) => {}
            None => {
                return Err(CorpusError::UnknownLabel {
                    row: None,
                    label: label.to_string(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn merged(raw: &[&str]) -> BTreeSet<MergedLabel> {
        merge_raw_labels(raw, &LabelVocabulary::default()).unwrap()
    }

    fn values(labels: &[ValueLabel]) -> BTreeSet<MergedLabel> {
        labels.iter().map(|l| MergedLabel::Value(*l)).collect()
    }

    #[test]
    fn equality_becomes_fairness() {
        assert_eq!(merged(&["Equality"]), values(&[ValueLabel::Fairness]));
    }

    #[test]
    fn thin_morality_is_dropped() {
        assert!(merged(&["Thin Morality"]).is_empty());
    }

    #[test]
    fn care_and_proportionality() {
        assert_eq!(
            merged(&["Care", "Proportionality"]),
            values(&[ValueLabel::Care, ValueLabel::Fairness])
        );
    }

    #[test]
    fn equality_and_proportionality_collapse() {
        assert_eq!(
            merged(&["Equality", "Proportionality"]),
            values(&[ValueLabel::Fairness])
        );
    }

    #[test]
    fn non_moral_marker_preserved() {
        let m = merged(&["Non-Moral"]);
        assert_eq!(m, [MergedLabel::NonMoral].into_iter().collect());
        assert_eq!(merged(&[" non-moral "]), m);
    }

    #[test]
    fn unknown_label_is_named() {
        let err = merge_raw_labels(&["Liberty"], &LabelVocabulary::default()).unwrap_err();
        assert!(err.to_string().contains("`Liberty`"), "{err}");
    }

    #[test]
    fn aliases() {
        let mut vocab = LabelVocabulary::default();
        vocab.add_alias("NM", "Non-Moral").unwrap();
        assert_eq!(
            merge_raw_labels(&["nm"], &vocab).unwrap(),
            [MergedLabel::NonMoral].into_iter().collect()
        );
        assert!(vocab.add_alias("x", "Nope").is_err());
    }
}
