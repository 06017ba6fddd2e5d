//! Moral Foundation Theory label system.
//!
//! Ten polarity-specific value labels (five virtues, five violations) roll up
//! into five dyads. A sixth output category, Non-moral, is disjoint from all
//! dyads. The canonical order everywhere in this crate is the dyad listing
//! order: Care/Harm, Fairness/Cheating, Loyalty/Betrayal, Authority/Subversion,
//! Purity/Degradation, with the value before its violation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown label name `{0}`")]
pub struct UnknownLabel(pub String);

/// One of the five dyads, or the Non-moral category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoralDimension {
    CareHarm,
    FairnessCheating,
    LoyaltyBetrayal,
    AuthoritySubversion,
    PurityDegradation,
    NonMoral,
}

impl MoralDimension {
    /// All six output labels; the index of each entry is its multi-hot slot.
    pub const ALL: [MoralDimension; 6] = [
        MoralDimension::CareHarm,
        MoralDimension::FairnessCheating,
        MoralDimension::LoyaltyBetrayal,
        MoralDimension::AuthoritySubversion,
        MoralDimension::PurityDegradation,
        MoralDimension::NonMoral,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_moral(self) -> bool {
        self != MoralDimension::NonMoral
    }

    /// Serialized name. These strings are the contract for every file format.
    pub fn name(self) -> &'static str {
        match self {
            MoralDimension::CareHarm => "Care",
            MoralDimension::FairnessCheating => "Fairness",
            MoralDimension::LoyaltyBetrayal => "Loyalty",
            MoralDimension::AuthoritySubversion => "Authority",
            MoralDimension::PurityDegradation => "Purity",
            MoralDimension::NonMoral => "Non-moral",
        }
    }

    /// "Care/Harm" style name; `None` for Non-moral.
    pub fn dyad_name(self) -> Option<&'static str> {
        match self {
            MoralDimension::CareHarm => Some("Care/Harm"),
            MoralDimension::FairnessCheating => Some("Fairness/Cheating"),
            MoralDimension::LoyaltyBetrayal => Some("Loyalty/Betrayal"),
            MoralDimension::AuthoritySubversion => Some("Authority/Subversion"),
            MoralDimension::PurityDegradation => Some("Purity/Degradation"),
            MoralDimension::NonMoral => None,
        }
    }

    /// The (value, violation) pair of a dyad; `None` for Non-moral.
    pub fn members(self) -> Option<(ValueLabel, ValueLabel)> {
        let i = self.index();
        if self.is_moral() {
            Some((ValueLabel::ALL[2 * i], ValueLabel::ALL[2 * i + 1]))
        } else {
            None
        }
    }
}

impl fmt::Display for MoralDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MoralDimension {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MoralDimension::ALL
            .into_iter()
            .find(|d| d.name() == s || d.dyad_name() == Some(s))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for MoralDimension {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MoralDimension {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Value,
    Violation,
}

/// A polarity-specific moral label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueLabel {
    Care,
    Harm,
    Fairness,
    Cheating,
    Loyalty,
    Betrayal,
    Authority,
    Subversion,
    Purity,
    Degradation,
}

impl ValueLabel {
    pub const ALL: [ValueLabel; 10] = [
        ValueLabel::Care,
        ValueLabel::Harm,
        ValueLabel::Fairness,
        ValueLabel::Cheating,
        ValueLabel::Loyalty,
        ValueLabel::Betrayal,
        ValueLabel::Authority,
        ValueLabel::Subversion,
        ValueLabel::Purity,
        ValueLabel::Degradation,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ValueLabel::Care => "Care",
            ValueLabel::Harm => "Harm",
            ValueLabel::Fairness => "Fairness",
            ValueLabel::Cheating => "Cheating",
            ValueLabel::Loyalty => "Loyalty",
            ValueLabel::Betrayal => "Betrayal",
            ValueLabel::Authority => "Authority",
            ValueLabel::Subversion => "Subversion",
            ValueLabel::Purity => "Purity",
            ValueLabel::Degradation => "Degradation",
        }
    }

    pub fn polarity(self) -> Polarity {
        if self.index().is_multiple_of(2) {
            Polarity::Value
        } else {
            Polarity::Violation
        }
    }

    pub fn dimension(self) -> MoralDimension {
        dimension_of(self)
    }
}

impl fmt::Display for ValueLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValueLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ValueLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl Serialize for ValueLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ValueLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parent dyad of a value label. Never returns `NonMoral`.
pub fn dimension_of(label: ValueLabel) -> MoralDimension {
    MoralDimension::ALL[label.index() / 2]
}

/// The ten value labels in canonical order.
pub fn all_value_labels() -> [ValueLabel; 10] {
    ValueLabel::ALL
}

/// The five dyads in prompt order, without Non-moral.
pub fn moral_dimensions() -> [MoralDimension; 5] {
    [
        MoralDimension::CareHarm,
        MoralDimension::FairnessCheating,
        MoralDimension::LoyaltyBetrayal,
        MoralDimension::AuthoritySubversion,
        MoralDimension::PurityDegradation,
    ]
}

/// Multi-hot vector over the six output labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LabelVector([bool; MoralDimension::COUNT]);

impl LabelVector {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn non_moral() -> Self {
        Self::from_dimensions([MoralDimension::NonMoral])
    }

    pub fn from_bits(bits: [bool; MoralDimension::COUNT]) -> Self {
        Self(bits)
    }

    pub fn from_dimensions<I: IntoIterator<Item = MoralDimension>>(dims: I) -> Self {
        let mut v = Self::empty();
        for d in dims {
            v.insert(d);
        }
        v
    }

    pub fn bits(&self) -> [bool; MoralDimension::COUNT] {
        self.0
    }

    pub fn contains(&self, dim: MoralDimension) -> bool {
        self.0[dim.index()]
    }

    pub fn insert(&mut self, dim: MoralDimension) {
        self.0[dim.index()] = true;
    }

    pub fn remove(&mut self, dim: MoralDimension) {
        self.0[dim.index()] = false;
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn has_moral(&self) -> bool {
        moral_dimensions().iter().any(|&d| self.contains(d))
    }

    /// Non-moral set implies no dyad set, and the vector is not empty.
    pub fn is_well_formed(&self) -> bool {
        !self.is_empty() && !(self.contains(MoralDimension::NonMoral) && self.has_moral())
    }

    pub fn iter(&self) -> impl Iterator<Item = MoralDimension> + '_ {
        MoralDimension::ALL
            .into_iter()
            .filter(|d| self.contains(*d))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.iter().map(MoralDimension::name).collect()
    }
}

impl FromIterator<MoralDimension> for LabelVector {
    fn from_iter<I: IntoIterator<Item = MoralDimension>>(iter: I) -> Self {
        Self::from_dimensions(iter)
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

impl Serialize for LabelVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for LabelVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dims = Vec::<MoralDimension>::deserialize(deserializer)?;
        Ok(Self::from_dimensions(dims))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn dimension_of_examples() {
        assert_eq!(dimension_of(ValueLabel::Care), MoralDimension::CareHarm);
        assert_eq!(
            dimension_of(ValueLabel::Degradation),
            MoralDimension::PurityDegradation
        );
        assert_eq!(
            dimension_of(ValueLabel::Cheating),
            MoralDimension::FairnessCheating
        );
    }

    #[test]
    fn value_labels_in_listing_order() {
        let names: Vec<_> = all_value_labels().iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            [
                "Care",
                "Harm",
                "Fairness",
                "Cheating",
                "Loyalty",
                "Betrayal",
                "Authority",
                "Subversion",
                "Purity",
                "Degradation"
            ]
        );
        let unique: HashSet<_> = all_value_labels().into_iter().collect();
        assert_eq!(unique.len(), 10);
    }

    #[test]
    fn moral_dimensions_exclude_non_moral() {
        let dims = moral_dimensions();
        assert_eq!(dims.len(), 5);
        assert!(!dims.contains(&MoralDimension::NonMoral));
        let dyads: Vec<_> = dims.iter().map(|d| d.dyad_name().unwrap()).collect();
        assert_eq!(
            dyads,
            [
                "Care/Harm",
                "Fairness/Cheating",
                "Loyalty/Betrayal",
                "Authority/Subversion",
                "Purity/Degradation"
            ]
        );
    }

    #[test]
    fn each_dyad_has_one_value_and_one_violation() {
        for d in moral_dimensions() {
            let members: Vec<_> = all_value_labels()
                .into_iter()
                .filter(|l| dimension_of(*l) == d)
                .collect();
            assert_eq!(members.len(), 2);
            assert_eq!(members[0].polarity(), Polarity::Value);
            assert_eq!(members[1].polarity(), Polarity::Violation);
            assert_eq!(d.members(), Some((members[0], members[1])));
        }
        assert_eq!(MoralDimension::NonMoral.members(), None);
    }

    #[test]
    fn polarity_matches_virtue_names() {
        let virtues = ["Care", "Fairness", "Loyalty", "Authority", "Purity"];
        for l in all_value_labels() {
            assert_eq!(l.polarity() == Polarity::Value, virtues.contains(&l.name()));
        }
    }

    #[test]
    fn dimension_of_is_surjective_onto_dyads() {
        let image: HashSet<_> = all_value_labels().into_iter().map(dimension_of).collect();
        assert_eq!(image.len(), 5);
        assert!(!image.contains(&MoralDimension::NonMoral));
    }

    #[test]
    fn label_names_round_trip() {
        for d in MoralDimension::ALL {
            assert_eq!(d.name().parse::<MoralDimension>().unwrap(), d);
        }
        for l in ValueLabel::ALL {
            assert_eq!(l.name().parse::<ValueLabel>().unwrap(), l);
        }
        assert!("Liberty".parse::<ValueLabel>().is_err());
        assert_eq!(MoralDimension::NonMoral.name(), "Non-moral");
    }

    #[test]
    fn label_vector_serializes_as_names() {
        let v = LabelVector::from_dimensions([
            MoralDimension::PurityDegradation,
            MoralDimension::CareHarm,
        ]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"["Care","Purity"]"#);
        let back: LabelVector = serde_json::from_str(r#"["Purity","Care"]"#).unwrap();
        assert_eq!(back, v);
        assert!(v.is_well_formed());
        assert!(!LabelVector::empty().is_well_formed());
        let mut mixed = LabelVector::non_moral();
        mixed.insert(MoralDimension::CareHarm);
        assert!(!mixed.is_well_formed());
    }
}
