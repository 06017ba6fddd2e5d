use std::fmt::Write as _;

use serde::Serialize;

use super::{GoldItem, SubCorpus};
use crate::taxonomy::MoralDimension;

/// Row order of the published label-distribution table.
pub const TABLE_ROW_ORDER: [MoralDimension; 6] = [
    MoralDimension::NonMoral,
    MoralDimension::FairnessCheating,
    MoralDimension::CareHarm,
    MoralDimension::PurityDegradation,
    MoralDimension::LoyaltyBetrayal,
    MoralDimension::AuthoritySubversion,
];

/// Published counts for one sub-corpus.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceColumn {
    /// Counts in [`TABLE_ROW_ORDER`].
    pub counts: [usize; 6],
    /// The printed "All" row.
    pub all: usize,
    /// Items remaining after filtering.
    pub items: usize,
}

/// Published MFRC label distribution after preprocessing, per sub-corpus A, B, C.
///
/// The printed "All" value for C (5802) is not the sum of its rows (5984);
/// both are kept as printed.
pub const REFERENCE_DISTRIBUTION: [ReferenceColumn; 3] = [
    ReferenceColumn {
        counts: [2278, 510, 708, 102, 105, 74],
        all: 3777,
        items: 3472,
    },
    ReferenceColumn {
        counts: [2684, 731, 473, 90, 122, 211],
        all: 4311,
        items: 3949,
    },
    ReferenceColumn {
        counts: [4330, 638, 424, 75, 167, 350],
        all: 5802,
        items: 5443,
    },
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SubCorpusDistribution {
    /// Items carrying each label, indexed by [`MoralDimension::index`].
    pub counts: [usize; 6],
    pub items: usize,
}

impl SubCorpusDistribution {
    pub fn count(&self, dim: MoralDimension) -> usize {
        self.counts[dim.index()]
    }

    /// Sum of label occurrences (the "All" row).
    pub fn all(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LabelDistribution {
    pub per_subcorpus: [SubCorpusDistribution; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistributionDelta {
    pub subcorpus: SubCorpus,
    pub row: String,
    pub observed: usize,
    pub reference: usize,
    pub delta: i64,
}

impl LabelDistribution {
    pub fn from_items<'a, I: IntoIterator<Item = &'a GoldItem>>(items: I) -> Self {
        let mut dist = LabelDistribution::default();
        for item in items {
            let col = &mut dist.per_subcorpus[item.subcorpus.index()];
            col.items += 1;
            for d in item.gold.iter() {
                col.counts[d.index()] += 1;
            }
        }
        dist
    }

    pub fn get(&self, subcorpus: SubCorpus) -> &SubCorpusDistribution {
        &self.per_subcorpus[subcorpus.index()]
    }

    /// Per-row differences against [`REFERENCE_DISTRIBUTION`], including the
    /// "All" and "Items" rows.
    pub fn deltas(&self) -> Vec<DistributionDelta> {
        let mut out = Vec::new();
        for sc in SubCorpus::ALL {
            let observed = self.get(sc);
            let reference = &REFERENCE_DISTRIBUTION[sc.index()];
            let mut push = |row: &str, observed: usize, reference: usize| {
                out.push(DistributionDelta {
                    subcorpus: sc,
                    row: row.to_string(),
                    observed,
                    reference,
                    delta: observed as i64 - reference as i64,
                })
            };
            for (dim, &r) in TABLE_ROW_ORDER.iter().zip(&reference.counts) {
                push(dim.name(), observed.count(*dim), r);
            }
            push("All", observed.all(), reference.all);
            push("Items", observed.items, reference.items);
        }
        out
    }

    /// Plain-text grid in the published row order.
    pub fn render_grid(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16}{:>10}{:>10}{:>10}",
            "Moral Dimension", "Corpus A", "Corpus B", "Corpus C"
        );
        let _ = writeln!(s, "{}", "-".repeat(46));
        let mut row = |name: &str, f: &dyn Fn(&SubCorpusDistribution) -> usize| {
            let _ = write!(s, "{name:<16}");
            for sc in SubCorpus::ALL {
                let _ = write!(s, "{:>10}", f(self.get(sc)));
            }
            s.push('\n');
        };
        for dim in TABLE_ROW_ORDER {
            row(dim.name(), &|c| c.count(dim));
        }
        row("All", &|c| c.all());
        row("Items", &|c| c.items);
        s
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from("label\tA\tB\tC\n");
        let mut row = |name: &str, f: &dyn Fn(&SubCorpusDistribution) -> usize| {
            let cells: Vec<String> = SubCorpus::ALL
                .iter()
                .map(|sc| f(self.get(*sc)).to_string())
                .collect();
            let _ = writeln!(s, "{name}\t{}", cells.join("\t"));
        };
        for dim in TABLE_ROW_ORDER {
            row(dim.name(), &|c| c.count(dim));
        }
        row("All", &|c| c.all());
        row("Items", &|c| c.items);
        s
    }
}
