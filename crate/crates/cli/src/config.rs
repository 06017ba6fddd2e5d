use std::path::PathBuf;

use moralscope_core::corpus::TieRule;
use moralscope_core::llm::LlmClientConfig;
use moralscope_core::metrics::EvalOptions;
use moralscope_core::nli::NliConfig;
use moralscope_core::supervised::ClassifierConfig;
use moralscope_core::{BackendKind, SubCorpus};
use serde::{Deserialize, Serialize};

/// Declarative run configuration. Every field has a default, so an empty
/// file is valid; command-line flags override what is set here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds every random choice (currently supervised training).
    pub seed: u64,
    /// Output root, relative to the working directory.
    pub output_dir: Option<PathBuf>,
    pub prepare: PrepareSection,
    pub classify: ClassifySection,
    pub nli: NliSection,
    pub llm: LlmSection,
    pub supervised: SupervisedSection,
    pub evaluate: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    pub raw: Option<PathBuf>,
    /// Column and value mapping; the built-in MFRC mapping when absent.
    pub manifest: Option<PathBuf>,
    pub threshold: f64,
    pub tie_rule: TieRule,
}

impl Default for PrepareSection {
    fn default() -> Self {
        PrepareSection {
            raw: None,
            manifest: None,
            threshold: 0.5,
            tie_rule: TieRule::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifySection {
    pub backend: Option<BackendKind>,
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NliSection {
    /// `lexicon`, `table:<path>` or `http:<url>`.
    pub scorer: String,
    #[serde(flatten)]
    pub settings: NliConfig,
}

impl Default for NliSection {
    fn default() -> Self {
        NliSection {
            scorer: "lexicon".into(),
            settings: NliConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    /// `http`, or `replay:<path>` to answer from recorded completions.
    pub client: String,
    #[serde(flatten)]
    pub settings: LlmClientConfig,
}

impl Default for LlmSection {
    fn default() -> Self {
        LlmSection {
            client: "http".into(),
            settings: LlmClientConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisedSection {
    pub train_corpus: Option<SubCorpus>,
    /// Prepared training file; defaults to `<output>/prepared/<tag>.jsonl`.
    pub corpus: Option<PathBuf>,
    /// Artifact directory used by `classify`.
    pub artifact: Option<PathBuf>,
    pub allow_in_domain: bool,
    #[serde(flatten)]
    pub classifier: ClassifierConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml(
            r#"
            seed = 7
            output_dir = "runs/one"
            [prepare]
            raw = "mfrc.csv"
            tie_rule = "non_moral_wins"
            [nli]
            scorer = "table:scores.jsonl"
            threshold = 0.6
            [llm]
            client = "replay:audit.jsonl"
            max_retries = 1
            [supervised]
            train_corpus = "B"
            learning_rate = 0.001
            epochs = 2
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.prepare.tie_rule, TieRule::NonMoralWins);
        assert_eq!(c.nli.settings.threshold, 0.6);
        assert_eq!(c.llm.settings.max_retries, 1);
        assert_eq!(c.supervised.train_corpus, Some(SubCorpus::B));
        assert_eq!(c.supervised.classifier.epochs, 2);
        assert!(RunConfig::from_toml("sed = 1").is_err());
    }
}
