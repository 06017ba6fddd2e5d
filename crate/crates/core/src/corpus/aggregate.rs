use super::{AnnotatedComment, Confidence, DiscardReason, GoldItem, MergedComment, MergedLabel};
use crate::taxonomy::{dimension_of, moral_dimensions, LabelVector, MoralDimension};

/// Resolution when the non-moral marker and a dimension both reach the majority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// Any dimension at the threshold suppresses Non-moral.
    #[default]
    DimensionWins,
    /// Non-moral wins when its ratio is at least every qualifying dimension's ratio.
    NonMoralWins,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AggregationConfig {
    /// Inclusive vote-share threshold.
    pub threshold: f64,
    pub tie_rule: TieRule,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            threshold: 0.5,
            tie_rule: TieRule::DimensionWins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterOutcome {
    Kept(AnnotatedComment),
    Discard(DiscardReason),
}

/// Drops uncertain annotations; discards the comment if fewer than two remain.
pub fn filter_annotations(mut comment: AnnotatedComment) -> FilterOutcome {
    if comment.text.trim().is_empty() {
        return FilterOutcome::Discard(DiscardReason::EmptyText);
    }
    comment
        .annotations
        .retain(|a| a.confidence == Confidence::Confident);
    if comment.annotations.len() < 2 {
        FilterOutcome::Discard(DiscardReason::TooFewAnnotators)
    } else {
        FilterOutcome::Kept(comment)
    }
}

/// Majority vote over merged annotations.
///
/// Each annotator contributes one vote to every dimension their label set
/// touches. A dimension is gold when its vote share reaches the threshold.
/// Non-moral is assigned only when no dimension qualifies (under the default
/// tie rule) and the non-moral marker itself reaches the threshold.
pub fn aggregate_item(
    comment: &MergedComment,
    config: &AggregationConfig,
) -> Result<GoldItem, DiscardReason> {
    let n = comment.annotations.len();
    if n < 2 {
        return Err(DiscardReason::TooFewAnnotators);
    }

    let mut votes = [0usize; MoralDimension::COUNT];
    for ann in &comment.annotations {
        let mut touched = LabelVector::empty();
        for label in &ann.labels {
            match label {
                MergedLabel::Value(v) => touched.insert(dimension_of(*v)),
                MergedLabel::NonMoral => touched.insert(MoralDimension::NonMoral),
            }
        }
        if touched.contains(MoralDimension::NonMoral) && touched.has_moral() {
            log::warn!(
                "comment {}: annotator {} marked both non-moral and a dimension",
                comment.id,
                ann.annotator_id
            );
        }
        for d in touched.iter() {
            votes[d.index()] += 1;
        }
    }

    let share = |d: MoralDimension| votes[d.index()] as f64 / n as f64;
    let qualifying: Vec<MoralDimension> = moral_dimensions()
        .into_iter()
        .filter(|&d| share(d) >= config.threshold)
        .collect();
    let non_moral_share = share(MoralDimension::NonMoral);
    let non_moral_meets = non_moral_share >= config.threshold;

    let non_moral_wins = match config.tie_rule {
        TieRule::DimensionWins => qualifying.is_empty() && non_moral_meets,
        TieRule::NonMoralWins => {
            non_moral_meets && qualifying.iter().all(|&d| non_moral_share >= share(d))
        }
    };

    let gold = if non_moral_wins {
        LabelVector::non_moral()
    } else if !qualifying.is_empty() {
        LabelVector::from_dimensions(qualifying)
    } else {
        return Err(DiscardReason::NoMajority);
    };

    Ok(GoldItem {
        id: comment.id.clone(),
        text: comment.text.clone(),
        subcorpus: comment.subcorpus,
        gold,
        annotator_count: n,
    })
}
