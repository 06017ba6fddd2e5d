//! Detection of Moral Foundation Theory dimensions in short texts.
//!
//! Three interchangeable backends produce the same six-label multi-hot output
//! (five moral dyads plus Non-moral):
//!
//! - [`nli`]: zero-shot natural language inference over ten value-label hypotheses.
//! - [`llm`]: a two-stage prompt sent to a text-completion endpoint.
//! - [`supervised`]: a multi-label head trained on one sub-corpus.
//!
//! [`corpus`] builds majority-vote gold labels from raw Reddit annotations and
//! [`metrics`] scores predictions against them.

pub mod corpus;
pub mod jsonl;
pub mod llm;
pub mod metrics;
pub mod nli;
pub mod prediction;
pub mod supervised;
pub mod taxonomy;

#[cfg(test)]
mod testutil;

pub use corpus::{GoldItem, SubCorpus};
pub use prediction::{BackendKind, LabelScores, PredictionRecord, PredictionSet, PredictionStatus};
pub use taxonomy::{LabelVector, MoralDimension, ValueLabel};
