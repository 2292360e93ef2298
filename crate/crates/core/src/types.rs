//! Domain types shared by the feature extractors, the classifier and the sweep harness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of similarity features.
pub const FEATURE_COUNT: usize = 13;

/// A Chinese term together with its English translations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    surface: String,
    translations: Vec<String>,
}

impl Term {
    /// Builds a term. Translations are trimmed, empty entries dropped, and
    /// duplicates removed keeping the first occurrence.
    pub fn new<I, S>(surface: impl Into<String>, translations: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let surface = surface.into();
        if surface.trim().is_empty() {
            return Err(Error::invalid("term surface must be non-empty"));
        }
        Ok(Term {
            surface,
            translations: dedup_translations(translations),
        })
    }

    pub fn untranslated(surface: impl Into<String>) -> Result<Self> {
        Term::new(surface, std::iter::empty::<&str>())
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn translations(&self) -> &[String] {
        &self.translations
    }

    /// Number of Unicode code points in the surface form.
    pub fn char_len(&self) -> usize {
        self.surface.chars().count()
    }
}

pub(crate) fn dedup_translations<I, S>(items: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for item in items {
        let t = item.as_ref().trim();
        if !t.is_empty() && seen.insert(t.to_string()) {
            out.push(t.to_string());
        }
    }
    out
}

/// Binary class of a term pair. Encoded as +1 / -1 for the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPair {
    pub a: Term,
    pub b: Term,
    pub label: Label,
}

impl LabeledPair {
    pub fn new(a: Term, b: Term, label: Label) -> Self {
        LabeledPair { a, b, label }
    }
}

/// Identifier of one of the thirteen features, numbered 1 through 13.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureId(u8);

impl FeatureId {
    pub const ZH_COSINE: FeatureId = FeatureId(1);
    pub const EN_SET_COSINE: FeatureId = FeatureId(2);
    pub const EUCLIDEAN: FeatureId = FeatureId(3);
    pub const ZH_EDIT_DISTANCE: FeatureId = FeatureId(4);
    pub const EN_SET_EDIT_DISTANCE: FeatureId = FeatureId(5);
    pub const DUPLICATE_WORD: FeatureId = FeatureId(6);
    pub const SUBSEQUENCE: FeatureId = FeatureId(7);
    pub const FIRST_CHARACTERS: FeatureId = FeatureId(8);
    pub const ABBREVIATION: FeatureId = FeatureId(9);
    pub const PINYIN_EDIT_DISTANCE: FeatureId = FeatureId(10);
    pub const COMMON_RADICALS: FeatureId = FeatureId(11);
    pub const NGD_PRIMARY: FeatureId = FeatureId(12);
    pub const NGD_SECONDARY: FeatureId = FeatureId(13);

    pub fn new(id: u8) -> Result<Self> {
        if (1..=FEATURE_COUNT as u8).contains(&id) {
            Ok(FeatureId(id))
        } else {
            Err(Error::invalid(format!("feature id {id} outside 1..=13")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based column index.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < FEATURE_COUNT, "feature index {index} out of range");
        FeatureId(index as u8 + 1)
    }

    pub fn all() -> impl Iterator<Item = FeatureId> {
        (1..=FEATURE_COUNT as u8).map(FeatureId)
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "zh_cosine",
            2 => "en_set_cosine",
            3 => "euclidean",
            4 => "zh_edit_distance",
            5 => "en_set_edit_distance",
            6 => "duplicate_word",
            7 => "subsequence",
            8 => "first_characters",
            9 => "abbreviation",
            10 => "pinyin_edit_distance",
            11 => "common_radicals",
            12 => "ngd_primary",
            13 => "ngd_secondary",
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A non-empty subset of features; bit `i - 1` stands for feature `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(u16);

impl FeatureMask {
    pub const FULL: FeatureMask = FeatureMask((1 << FEATURE_COUNT) - 1);

    pub fn from_bits(bits: u16) -> Result<Self> {
        if bits == 0 {
            return Err(Error::invalid("feature mask must be non-empty"));
        }
        if bits >> FEATURE_COUNT != 0 {
            return Err(Error::invalid(format!(
                "feature mask {bits:#x} has bits beyond feature 13"
            )));
        }
        Ok(FeatureMask(bits))
    }

    pub fn from_ids<I: IntoIterator<Item = FeatureId>>(ids: I) -> Result<Self> {
        let bits = ids.into_iter().fold(0u16, |acc, id| acc | 1 << id.index());
        FeatureMask::from_bits(bits)
    }

    pub fn single(id: FeatureId) -> Self {
        FeatureMask(1 << id.index())
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn contains(self, id: FeatureId) -> bool {
        self.0 & (1 << id.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Included features in ascending id order.
    pub fn ids(self) -> impl Iterator<Item = FeatureId> {
        FeatureId::all().filter(move |id| self.contains(*id))
    }

    /// Column indices (0-based) of the included features, ascending.
    pub fn indices(self) -> Vec<usize> {
        self.ids().map(FeatureId::index).collect()
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for id in self.ids() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{id}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = Error;

    /// Parses a comma-joined list of feature ids such as `1,4,5,11,12`.
    fn from_str(s: &str) -> Result<Self> {
        let mut ids = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let id: u8 = part
                .parse()
                .map_err(|_| Error::invalid(format!("bad feature id {part:?} in mask {s:?}")))?;
            ids.push(FeatureId::new(id)?);
        }
        FeatureMask::from_ids(ids)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let ids: Vec<u8> = self.ids().map(FeatureId::get).collect();
        ids.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<u8>::deserialize(deserializer)?;
        let ids = ids
            .into_iter()
            .map(FeatureId::new)
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FeatureMask::from_ids(ids).map_err(serde::de::Error::custom)
    }
}

/// Feature values for one pair under a mask. Every masked feature is either
/// present in `values` or listed in `missing`, never both.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: BTreeMap<FeatureId, f64>,
    missing: BTreeSet<FeatureId>,
}

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector {
            values: BTreeMap::new(),
            missing: BTreeSet::new(),
        }
    }

    /// Builds a vector from a full 13-slot row, keeping only masked features.
    pub fn from_row(row: &[Option<f64>; FEATURE_COUNT], mask: FeatureMask) -> Self {
        let mut v = FeatureVector::new();
        for id in mask.ids() {
            v.set(id, row[id.index()]);
        }
        v
    }

    pub fn set(&mut self, id: FeatureId, value: Option<f64>) {
        match value {
            Some(x) => {
                self.missing.remove(&id);
                self.values.insert(id, x);
            }
            None => {
                self.values.remove(&id);
                self.missing.insert(id);
            }
        }
    }

    pub fn get(&self, id: FeatureId) -> Option<f64> {
        self.values.get(&id).copied()
    }

    pub fn is_missing(&self, id: FeatureId) -> bool {
        self.missing.contains(&id)
    }

    pub fn values(&self) -> &BTreeMap<FeatureId, f64> {
        &self.values
    }

    pub fn missing(&self) -> &BTreeSet<FeatureId> {
        &self.missing
    }

    /// The mask covered by this vector (values and missing entries together).
    pub fn mask(&self) -> Option<FeatureMask> {
        FeatureMask::from_ids(self.values.keys().chain(self.missing.iter()).copied()).ok()
    }
}

impl Default for FeatureVector {
    fn default() -> Self {
        FeatureVector::new()
    }
}
