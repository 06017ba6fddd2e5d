use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Confidence, CorpusError, LabelVocabulary, SubCorpus};

/// Column names of the raw annotation table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMap {
    /// Comment id column. When absent, ids are derived from the comment text.
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
    /// Column whose values select the sub-corpus (see [`Manifest::subcorpora`]).
    pub bucket: String,
    pub annotator: String,
    pub labels: String,
    pub confidence: String,
}

/// Declares how a raw release maps onto the pipeline's inputs, so format drift
/// in the release does not need code changes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Separator between labels inside the label cell.
    #[serde(default = "default_separator")]
    pub label_separator: String,
    pub columns: ColumnMap,
    /// Bucket value -> sub-corpus. Values not listed are an error.
    pub subcorpora: BTreeMap<String, SubCorpus>,
    /// Raw confidence value -> confidence class. Values not listed are an error.
    pub confidence: BTreeMap<String, Confidence>,
    #[serde(default = "default_markers")]
    pub non_moral_markers: Vec<String>,
    /// Extra raw label spellings, alias -> existing label.
    #[serde(default)]
    pub label_aliases: BTreeMap<String, String>,
}

fn default_delimiter() -> char {
    ','
}

fn default_separator() -> String {
    ",".to_string()
}

fn default_markers() -> Vec<String> {
    vec!["Non-Moral".to_string()]
}

/// Manifest for the public MFRC release (one row per comment and annotator).
pub const MFRC_RELEASE_MANIFEST: &str = r#"
delimiter = ","
label_separator = ","
non_moral_markers = ["Non-Moral"]

[columns]
text = "text"
bucket = "bucket"
annotator = "annotator"
labels = "annotation"
confidence = "confidence"

[subcorpora]
"Everyday Morality" = "A"
"US Politics" = "B"
"French politics" = "C"

[confidence]
"Confident" = "confident"
"Somewhat Confident" = "uncertain"
"Not Confident" = "uncertain"
"#;

impl Manifest {
    pub fn mfrc_release() -> Self {
        Self::from_toml(MFRC_RELEASE_MANIFEST).expect("built-in manifest parses")
    }

    pub fn from_toml(s: &str) -> Result<Self, CorpusError> {
        let manifest: Manifest =
            toml::from_str(s).map_err(|e| CorpusError::Manifest(e.to_string()))?;
        manifest.vocabulary()?;
        if manifest.label_separator.is_empty() {
            return Err(CorpusError::Manifest("empty label_separator".into()));
        }
        Ok(manifest)
    }

    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn vocabulary(&self) -> Result<LabelVocabulary, CorpusError> {
        let mut vocab = LabelVocabulary::with_non_moral_markers(&self.non_moral_markers);
        for (alias, target) in &self.label_aliases {
            vocab.add_alias(alias, target)?;
        }
        Ok(vocab)
    }

    pub(crate) fn subcorpus_of(&self, value: &str) -> Option<SubCorpus> {
        lookup_ci(&self.subcorpora, value)
    }

    pub(crate) fn confidence_of(&self, value: &str) -> Option<Confidence> {
        lookup_ci(&self.confidence, value)
    }
}

fn lookup_ci<T: Copy>(map: &BTreeMap<String, T>, value: &str) -> Option<T> {
    let value = value.trim();
    map.get(value).copied().or_else(|| {
        map.iter()
            .find(|(k, _)| k.trim().eq_ignore_ascii_case(value))
            .map(|(_, v)| *v)
    })
}
