//! Pinyin edit distance and common-radical ratio.

use std::collections::HashMap;

use crate::resources::{PinyinTable, RadicalTable};
use crate::string_feats::relative_char_distance;
use crate::types::Term;

/// Joins syllables so that "xian" and "xi"+"an" stay distinguishable.
pub const SYLLABLE_SEPARATOR: char = '-';

#[derive(Debug, Clone, PartialEq)]
pub struct PinyinSequence {
    pub syllables: Vec<String>,
    /// Share of the input characters found in the table.
    pub coverage: f64,
}

impl PinyinSequence {
    pub fn is_complete(&self) -> bool {
        self.coverage >= 1.0
    }

    pub fn joined(&self) -> String {
        let mut s = String::new();
        for (i, syl) in self.syllables.iter().enumerate() {
            if i > 0 {
                s.push(SYLLABLE_SEPARATOR);
            }
            s.push_str(syl);
        }
        s
    }
}

pub fn pinyin_sequence(term: &Term, table: &PinyinTable) -> PinyinSequence {
    let total = term.char_len();
    let syllables: Vec<String> = term
        .surface()
        .chars()
        .filter_map(|c| table.get(c).map(str::to_string))
        .collect();
    let coverage = if total == 0 {
        0.0
    } else {
        syllables.len() as f64 / total as f64
    };
    PinyinSequence {
        syllables,
        coverage,
    }
}

/// Relative character edit distance of the separator-joined pinyin strings.
/// `None` unless every character of both terms has a reading.
pub fn pinyin_edit_distance(a: &Term, b: &Term, table: &PinyinTable) -> Option<f64> {
    let pa = pinyin_sequence(a, table);
    let pb = pinyin_sequence(b, table);
    if !pa.is_complete() || !pb.is_complete() {
        return None;
    }
    relative_char_distance(&pa.joined(), &pb.joined())
}

fn radical_counts(term: &Term, table: &RadicalTable) -> HashMap<char, usize> {
    let mut counts = HashMap::new();
    for c in term.surface().chars() {
        if let Some(r) = table.get(c) {
            *counts.entry(r).or_insert(0) += 1;
        }
    }
    counts
}

/// Size of the multiset intersection of the two terms' radicals, divided by
/// the longer surface length. `None` if either term has no known radical.
pub fn common_radicals(a: &Term, b: &Term, table: &RadicalTable) -> Option<f64> {
    let ra = radical_counts(a, table);
    let rb = radical_counts(b, table);
    if ra.is_empty() || rb.is_empty() {
        return None;
    }
    let shared: usize = ra
        .iter()
        .map(|(r, n)| rb.get(r).map_or(0, |m| (*n).min(*m)))
        .sum();
    Some(shared as f64 / a.char_len().max(b.char_len()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use proptest::prelude::*;

    fn t(s: &str) -> Term {
        Term::untranslated(s).unwrap()
    }

    #[test]
    fn ebola_transliterations_share_pinyin() {
        let py = bundled::pinyin_table();
        let seq = pinyin_sequence(&t("埃博拉病毒"), &py);
        assert_eq!(seq.syllables, ["ai", "bo", "la", "bing", "du"]);
        assert_eq!(seq.coverage, 1.0);
        assert_eq!(
            pinyin_edit_distance(&t("埃博拉病毒"), &t("埃播拉病毒"), &py),
            Some(0.0)
        );
        assert_eq!(pinyin_edit_distance(&t("肝癌"), &t("肝癌"), &py), Some(0.0));
    }

    #[test]
    fn liver_vs_stomach_cancer() {
        let py = bundled::pinyin_table();
        assert_eq!(pinyin_sequence(&t("肝癌"), &py).joined(), "gan-ai");
        assert_eq!(pinyin_sequence(&t("胃癌"), &py).joined(), "wei-ai");
        // g->w, a->e, n->i over 6 characters.
        assert_eq!(pinyin_edit_distance(&t("肝癌"), &t("胃癌"), &py), Some(0.5));
    }

    #[test]
    fn partial_coverage_is_missing() {
        let py = crate::resources::load_pinyin_table("癌\tai\n".as_bytes()).unwrap();
        let seq = pinyin_sequence(&t("肝癌"), &py);
        assert_eq!(seq.syllables, ["ai"]);
        assert_eq!(seq.coverage, 0.5);
        let none = pinyin_sequence(&t("肝"), &py);
        assert!(none.syllables.is_empty());
        assert_eq!(none.coverage, 0.0);
        assert_eq!(pinyin_edit_distance(&t("肝癌"), &t("癌"), &py), None);
    }

    #[test]
    fn common_radical_examples() {
        let rad = bundled::radical_table();
        assert_eq!(common_radicals(&t("癌"), &t("癌"), &rad), Some(1.0));
        assert_eq!(common_radicals(&t("癌"), &t("病"), &rad), Some(1.0));
        // 肝/癌 -> 月/疒; 土 and 十 share neither.
        assert_eq!(common_radicals(&t("肝癌"), &t("埃博"), &rad), Some(0.0));
        // 肝癌 vs 胃病: 月 and 疒 both shared.
        assert_eq!(common_radicals(&t("肝癌"), &t("胃病"), &rad), Some(1.0));
        // Multiset: 疒疒 vs 疒 shares only one, normalized by 2.
        assert_eq!(common_radicals(&t("癌病"), &t("癌"), &rad), Some(0.5));
        let empty = crate::resources::RadicalTable::default();
        assert_eq!(common_radicals(&t("癌"), &t("病"), &empty), None);
    }

    fn term_from(chars: &[char], idx: &[usize]) -> Term {
        Term::untranslated(
            idx.iter()
                .map(|&i| chars[i % chars.len()])
                .collect::<String>(),
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in prop::collection::vec(0usize..500, 1..6), b in prop::collection::vec(0usize..500, 1..6)) {
            let py = bundled::pinyin_table();
            let rad = bundled::radical_table();
            let chars = bundled::characters();
            let (ta, tb) = (term_from(&chars, &a), term_from(&chars, &b));
            prop_assert_eq!(pinyin_edit_distance(&ta, &tb, &py), pinyin_edit_distance(&tb, &ta, &py));
            let cr = common_radicals(&ta, &tb, &rad).unwrap();
            prop_assert_eq!(Some(cr), common_radicals(&tb, &ta, &rad));
            prop_assert!((0.0..=1.0).contains(&cr));
            prop_assert_eq!(pinyin_edit_distance(&ta, &ta, &py), Some(0.0));
        }

        #[test]
        fn homophone_swap_preserves_pinyin_distance(a in prop::collection::vec(0usize..500, 1..6), b in prop::collection::vec(0usize..500, 1..6), pos in 0usize..6, pick in 0usize..16) {
            let py = bundled::pinyin_table();
            let chars = bundled::characters();
            let (ta, tb) = (term_from(&chars, &a), term_from(&chars, &b));
            let mut swapped: Vec<char> = ta.surface().chars().collect();
            let pos = pos % swapped.len();
            let syl = py.get(swapped[pos]).unwrap();
            let homophones: Vec<char> = chars.iter().copied().filter(|&c| py.get(c) == Some(syl)).collect();
            swapped[pos] = homophones[pick % homophones.len()];
            let swapped = Term::untranslated(swapped.into_iter().collect::<String>()).unwrap();
            prop_assert_eq!(pinyin_edit_distance(&ta, &tb, &py), pinyin_edit_distance(&swapped, &tb, &py));
        }
    }
}
