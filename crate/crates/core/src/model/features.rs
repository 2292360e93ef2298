use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed_feats::{cosine_similarity, euclidean_distance, lookup_term_vector, set_cosine};
use crate::resources::{EmbeddingTable, PinyinTable, RadicalTable, TranslationLexicon};
use crate::string_feats::{
    abbreviation_match, duplicate_word, first_characters_match, relative_char_distance,
    set_edit_distance, subsequence, SetAggregation,
};
use crate::types::{FeatureId, FeatureMask, FeatureVector, LabeledPair, Term, FEATURE_COUNT};
use crate::web_dist::{ngd, HitCountProvider, Ngd};
use crate::zh_feats::{common_radicals, pinyin_edit_distance};

/// Cap applied to infinite (and very large) web distances.
pub const DEFAULT_NGD_MAX: f64 = 10.0;

/// Everything the extractors read. Immutable once built.
pub struct ResourceBundle {
    pub zh_embeddings: EmbeddingTable,
    pub en_embeddings: EmbeddingTable,
    pub pinyin: PinyinTable,
    pub radicals: RadicalTable,
    pub lexicon: TranslationLexicon,
    /// Provider behind feature 12.
    pub provider_primary: Box<dyn HitCountProvider>,
    /// Provider behind feature 13.
    pub provider_secondary: Box<dyn HitCountProvider>,
    pub set_aggregation: SetAggregation,
    pub ngd_max: f64,
}

/// One row of all thirteen slots; `None` marks missing or not computed.
pub type FeatureRow = [Option<f64>; FEATURE_COUNT];

/// Per-row side information gathered during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExtractionDiagnostics {
    pub rows: u64,
    /// Missing count per feature (index 0 is feature 1).
    pub missing: [u64; FEATURE_COUNT],
    /// Negative raw web distances raised to zero, per provider (12, 13).
    pub ngd_clamped: [u64; 2],
    /// Never-co-occurring pairs mapped to the cap, per provider.
    pub ngd_infinite: [u64; 2],
    /// Provider precondition failures, treated as missing.
    pub ngd_errors: [u64; 2],
}

impl ExtractionDiagnostics {
    pub fn merge(mut self, other: Self) -> Self {
        self.rows += other.rows;
        for i in 0..FEATURE_COUNT {
            self.missing[i] += other.missing[i];
        }
        for i in 0..2 {
            self.ngd_clamped[i] += other.ngd_clamped[i];
            self.ngd_infinite[i] += other.ngd_infinite[i];
            self.ngd_errors[i] += other.ngd_errors[i];
        }
        self
    }
}

fn translations<'a>(term: &'a Term, lexicon: &'a TranslationLexicon) -> &'a [String] {
    if term.translations().is_empty() {
        lexicon.get(term.surface()).unwrap_or(&[])
    } else {
        term.translations()
    }
}

fn web_feature(
    a: &Term,
    b: &Term,
    provider: &dyn HitCountProvider,
    cap: f64,
    slot: usize,
    diag: &mut ExtractionDiagnostics,
) -> Option<f64> {
    match ngd(a.surface(), b.surface(), provider) {
        Ok(d) => {
            match d {
                Ngd::Distance { clamped: true, .. } => diag.ngd_clamped[slot] += 1,
                Ngd::Infinite => diag.ngd_infinite[slot] += 1,
                _ => {}
            }
            d.capped(cap)
        }
        Err(e) => {
            log::warn!("web distance for ({}, {}): {e}", a.surface(), b.surface());
            diag.ngd_errors[slot] += 1;
            None
        }
    }
}

/// Computes the masked features of one pair; unmasked slots stay `None`.
pub fn extract_row(
    a: &Term,
    b: &Term,
    bundle: &ResourceBundle,
    mask: FeatureMask,
) -> (FeatureRow, ExtractionDiagnostics) {
    let mut row: FeatureRow = [None; FEATURE_COUNT];
    let mut diag = ExtractionDiagnostics {
        rows: 1,
        ..Default::default()
    };
    let ta = translations(a, &bundle.lexicon);
    let tb = translations(b, &bundle.lexicon);

    let wants = |id: FeatureId| mask.contains(id);
    let zh_vectors = if wants(FeatureId::ZH_COSINE) || wants(FeatureId::EUCLIDEAN) {
        lookup_term_vector(a, &bundle.zh_embeddings)
            .zip(lookup_term_vector(b, &bundle.zh_embeddings))
    } else {
        None
    };

    for id in mask.ids() {
        let value = match id {
            FeatureId::ZH_COSINE => zh_vectors
                .as_ref()
                .and_then(|(x, y)| cosine_similarity(x, y).ok()),
            FeatureId::EN_SET_COSINE => set_cosine(ta, tb, &bundle.en_embeddings),
            FeatureId::EUCLIDEAN => zh_vectors
                .as_ref()
                .and_then(|(x, y)| euclidean_distance(x, y).ok()),
            FeatureId::ZH_EDIT_DISTANCE => relative_char_distance(a.surface(), b.surface()),
            FeatureId::EN_SET_EDIT_DISTANCE => set_edit_distance(ta, tb, bundle.set_aggregation),
            FeatureId::DUPLICATE_WORD => duplicate_word(ta, tb),
            FeatureId::SUBSEQUENCE => subsequence(ta, tb),
            FeatureId::FIRST_CHARACTERS => first_characters_match(ta, tb),
            FeatureId::ABBREVIATION => abbreviation_match(ta, tb),
            FeatureId::PINYIN_EDIT_DISTANCE => pinyin_edit_distance(a, b, &bundle.pinyin),
            FeatureId::COMMON_RADICALS => common_radicals(a, b, &bundle.radicals),
            FeatureId::NGD_PRIMARY => web_feature(
                a,
                b,
                bundle.provider_primary.as_ref(),
                bundle.ngd_max,
                0,
                &mut diag,
            ),
            FeatureId::NGD_SECONDARY => web_feature(
                a,
                b,
                bundle.provider_secondary.as_ref(),
                bundle.ngd_max,
                1,
                &mut diag,
            ),
            _ => unreachable!(),
        };
        if value.is_none() {
            diag.missing[id.index()] += 1;
        }
        row[id.index()] = value;
    }
    (row, diag)
}

/// Masked feature vector of one pair.
pub fn extract_features(
    pair: &LabeledPair,
    bundle: &ResourceBundle,
    mask: FeatureMask,
) -> FeatureVector {
    let (row, _) = extract_row(&pair.a, &pair.b, bundle, mask);
    FeatureVector::from_row(&row, mask)
}

/// Feature rows of many pairs, computed once and shared by every mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub mask: FeatureMask,
    pub rows: Vec<FeatureRow>,
    pub diagnostics: ExtractionDiagnostics,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn vector(&self, row: usize, mask: FeatureMask) -> FeatureVector {
        FeatureVector::from_row(&self.rows[row], mask)
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            mask: self.mask,
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            diagnostics: self.diagnostics,
        }
    }
}

/// Extracts rows in parallel; the result does not depend on thread count.
pub fn extract_matrix(
    pairs: &[LabeledPair],
    bundle: &ResourceBundle,
    mask: FeatureMask,
) -> FeatureMatrix {
    let results: Vec<(FeatureRow, ExtractionDiagnostics)> = pairs
        .par_iter()
        .map(|p| extract_row(&p.a, &p.b, bundle, mask))
        .collect();
    let diagnostics = results
        .iter()
        .fold(ExtractionDiagnostics::default(), |acc, (_, d)| {
            acc.merge(*d)
        });
    FeatureMatrix {
        mask,
        rows: results.into_iter().map(|(r, _)| r).collect(),
        diagnostics,
    }
}
