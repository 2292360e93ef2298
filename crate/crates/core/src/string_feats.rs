//! Edit-distance features (relative edit distance of Chinese surfaces and of
//! English translation sets) and the binary English morphological features.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A string broken into comparison units: code points or lowercase words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolSequence {
    Chars(Vec<char>),
    Words(Vec<String>),
}

impl SymbolSequence {
    pub fn chars(s: &str) -> Self {
        SymbolSequence::Chars(s.chars().collect())
    }

    /// Whitespace tokens, ASCII-lowercased.
    pub fn words(s: &str) -> Self {
        SymbolSequence::Words(s.split_whitespace().map(str::to_ascii_lowercase).collect())
    }

    pub fn len(&self) -> usize {
        match self {
            SymbolSequence::Chars(v) => v.len(),
            SymbolSequence::Words(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Unit-cost Levenshtein distance over any comparable symbols, using two rows.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(x != y);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn edit_distance(a: &SymbolSequence, b: &SymbolSequence) -> Result<usize> {
    match (a, b) {
        (SymbolSequence::Chars(x), SymbolSequence::Chars(y)) => Ok(levenshtein(x, y)),
        (SymbolSequence::Words(x), SymbolSequence::Words(y)) => Ok(levenshtein(x, y)),
        _ => Err(Error::invalid(
            "edit distance needs sequences of the same granularity",
        )),
    }
}

/// Edit distance divided by the longer length; in `[0, 1]`.
pub fn relative_edit_distance(a: &SymbolSequence, b: &SymbolSequence) -> Result<f64> {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return Err(Error::invalid(
            "relative edit distance of two empty sequences",
        ));
    }
    Ok(edit_distance(a, b)? as f64 / longest as f64)
}

/// Relative edit distance of two strings at code-point granularity.
pub fn relative_char_distance(a: &str, b: &str) -> Option<f64> {
    relative_edit_distance(&SymbolSequence::chars(a), &SymbolSequence::chars(b)).ok()
}

/// How cross-pair distances of two translation sets are folded into one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetAggregation {
    /// The largest cross-pair distance.
    #[default]
    Max,
    /// The smallest cross-pair distance, i.e. the best-matching pair.
    Min,
}

impl std::str::FromStr for SetAggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(SetAggregation::Max),
            "min" => Ok(SetAggregation::Min),
            _ => Err(Error::invalid(format!(
                "aggregation must be max or min, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for SetAggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SetAggregation::Max => "max",
            SetAggregation::Min => "min",
        })
    }
}

fn fold(s: &str) -> String {
    s.to_ascii_lowercase()
}

fn cross_pairs<'a>(a: &'a [String], b: &'a [String]) -> impl Iterator<Item = (&'a str, &'a str)> {
    a.iter()
        .flat_map(move |x| b.iter().map(move |y| (x.as_str(), y.as_str())))
}

/// Set-level relative edit distance over case-folded characters.
pub fn set_edit_distance(a: &[String], b: &[String], agg: SetAggregation) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let values = cross_pairs(a, b).filter_map(|(x, y)| relative_char_distance(&fold(x), &fold(y)));
    match agg {
        SetAggregation::Max => values.fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |m| m.max(v)))
        }),
        SetAggregation::Min => values.fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |m| m.min(v)))
        }),
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn tokens(set: &[String]) -> HashSet<String> {
    set.iter()
        .flat_map(|t| t.split_whitespace().map(fold))
        .collect()
}

/// 1 if the two translation sets share a (lowercased) word.
pub fn duplicate_word(a: &[String], b: &[String]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let ta = tokens(a);
    Some(indicator(tokens(b).iter().any(|t| ta.contains(t))))
}

/// True if `needle` can be obtained from `hay` by deleting characters.
pub fn is_subsequence(needle: &str, hay: &str) -> bool {
    let mut hay = hay.chars();
    needle.chars().all(|c| hay.any(|h| h == c))
}

/// 1 if some translation of one side is a character subsequence of some
/// translation of the other side.
pub fn subsequence(a: &[String], b: &[String]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(indicator(cross_pairs(a, b).any(|(x, y)| {
        let (x, y) = (fold(x), fold(y));
        is_subsequence(&x, &y) || is_subsequence(&y, &x)
    })))
}

const ABBREVIATION_STOPWORDS: [&str; 4] = ["of", "the", "and", "for"];

/// First character of every whitespace token, lowercased.
pub fn initials(s: &str) -> String {
    s.split_whitespace()
        .filter_map(|w| w.chars().next())
        .flat_map(char::to_lowercase)
        .collect()
}

fn initials_without_stopwords(s: &str) -> String {
    s.split_whitespace()
        .filter(|w| !ABBREVIATION_STOPWORDS.contains(&w.to_ascii_lowercase().as_str()))
        .filter_map(|w| w.chars().next())
        .flat_map(char::to_lowercase)
        .collect()
}

fn uppercase_letters(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_uppercase())
        .flat_map(char::to_lowercase)
        .collect()
}

/// 1 if, for some cross pair, the word-initial sequences agree.
pub fn first_characters_match(a: &[String], b: &[String]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(indicator(cross_pairs(a, b).any(|(x, y)| {
        let ix = initials(x);
        !ix.is_empty() && ix == initials(y)
    })))
}

fn abbreviates(short: &str, long: &str) -> bool {
    let upper = uppercase_letters(short);
    !upper.is_empty()
        && (upper == uppercase_letters(long)
            || upper == initials(long)
            || upper == initials_without_stopwords(long))
}

/// 1 if, for some cross pair, the uppercase letters of one term match the
/// uppercase letters or the word initials of the other.
pub fn abbreviation_match(a: &[String], b: &[String]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    Some(indicator(
        cross_pairs(a, b).any(|(x, y)| abbreviates(x, y) || abbreviates(y, x)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    /// Exhaustive recursion over insert / delete / substitute.
    fn oracle(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ra)), Some((y, rb))) => {
                let sub = oracle(ra, rb) + usize::from(x != y);
                let del = oracle(ra, b) + 1;
                let ins = oracle(a, rb) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    fn ed(a: &str, b: &str) -> usize {
        edit_distance(&SymbolSequence::chars(a), &SymbolSequence::chars(b)).unwrap()
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(ed("abc", "abc"), 0);
        assert_eq!(ed("", "abc"), 3);
        let kitten: Vec<char> = "kitten".chars().collect();
        let sitting: Vec<char> = "sitting".chars().collect();
        assert_eq!(oracle(&kitten, &sitting), 3);
        assert_eq!(ed("kitten", "sitting"), 3);
        assert_eq!(ed("埃博拉病毒", "埃播拉病毒"), 1);
    }

    #[test]
    fn granularity_must_match() {
        let c = SymbolSequence::chars("liver");
        let w = SymbolSequence::words("liver cancer");
        assert!(edit_distance(&c, &w).is_err());
        let w2 = SymbolSequence::words("Liver carcinoma");
        assert_eq!(edit_distance(&w, &w2).unwrap(), 1);
    }

    #[test]
    fn relative_edit_distance_examples() {
        let r = |a: &str, b: &str| {
            relative_edit_distance(&SymbolSequence::chars(a), &SymbolSequence::chars(b)).unwrap()
        };
        assert_eq!(r("liver", "liver"), 0.0);
        assert_eq!(r("ab", "cd"), 1.0);
        let oracle_liver = oracle(&['l', 'i', 'v', 'e', 'r'], &['l', 'i', 'v', 'e', 'r', 's']);
        assert_eq!(oracle_liver, 1);
        assert!((r("liver", "livers") - 1.0 / 6.0).abs() < 1e-15);
        assert!(
            relative_edit_distance(&SymbolSequence::chars(""), &SymbolSequence::chars("")).is_err()
        );
    }

    #[test]
    fn set_edit_distance_examples() {
        use SetAggregation::*;
        for agg in [Max, Min] {
            assert_eq!(
                set_edit_distance(&set(&["ab"]), &set(&["ab"]), agg),
                Some(0.0)
            );
            assert_eq!(
                set_edit_distance(&set(&["ab"]), &set(&["cd"]), agg),
                Some(1.0)
            );
            assert_eq!(set_edit_distance(&set(&[]), &set(&["cd"]), agg), None);
        }
        let a = set(&["liver cancer", "hepatic carcinoma"]);
        let b = set(&["liver cancer"]);
        // 13 edits, checked with an independent table computation.
        let expected = 13.0 / 17.0;
        let got = set_edit_distance(&a, &b, Max).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert_eq!(set_edit_distance(&a, &b, Min), Some(0.0));
    }

    #[test]
    fn duplicate_word_examples() {
        assert_eq!(
            duplicate_word(&set(&["liver cancer"]), &set(&["liver carcinoma"])),
            Some(1.0)
        );
        assert_eq!(
            duplicate_word(&set(&["fever"]), &set(&["headache"])),
            Some(0.0)
        );
        assert_eq!(
            duplicate_word(&set(&["fever"]), &set(&["fever"])),
            Some(1.0)
        );
        assert_eq!(
            duplicate_word(&set(&["Fever"]), &set(&["fever pain"])),
            Some(1.0)
        );
        assert_eq!(duplicate_word(&set(&[]), &set(&["fever"])), None);
    }

    #[test]
    fn subsequence_examples() {
        assert_eq!(subsequence(&set(&["abc"]), &set(&["aXbYc"])), Some(1.0));
        assert_eq!(subsequence(&set(&["abc"]), &set(&["acb"])), Some(0.0));
        assert_eq!(subsequence(&set(&["abc"]), &set(&["abc"])), Some(1.0));
        assert_eq!(subsequence(&set(&["aXbYc"]), &set(&["abc"])), Some(1.0));
        assert_eq!(subsequence(&set(&["abc"]), &set(&[])), None);
    }

    #[test]
    fn first_characters_examples() {
        let f = |a: &str, b: &str| first_characters_match(&set(&[a]), &set(&[b])).unwrap();
        assert_eq!(f("liver cancer", "liver carcinoma"), 1.0);
        assert_eq!(f("liver cancer", "lung cancer"), 1.0);
        assert_eq!(f("liver cancer", "hepatic carcinoma"), 0.0);
        assert_eq!(f("Liver Cancer", "liver carcinoma"), 1.0);
    }

    #[test]
    fn abbreviation_examples() {
        let f = |a: &str, b: &str| abbreviation_match(&set(&[a]), &set(&[b])).unwrap();
        assert_eq!(f("USA", "United States of America"), 1.0);
        assert_eq!(f("USA", "united states of america"), 1.0);
        assert_eq!(f("USA", "USA"), 1.0);
        assert_eq!(f("USB", "United States of America"), 0.0);
        assert_eq!(f("HCC", "hepatocellular carcinoma cancer"), 1.0);
        assert_eq!(f("liver cancer", "lc"), 0.0);
        assert_eq!(f("United States of America", "USA"), 1.0);
    }

    fn small_string() -> impl Strategy<Value = String> {
        "[abc]{0,6}"
    }

    fn translation_set() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-cA-C]{1,4}( [a-c]{1,4}){0,2}", 1..4)
    }

    proptest! {
        #[test]
        fn matches_recursive_oracle(a in small_string(), b in small_string()) {
            let ca: Vec<char> = a.chars().collect();
            let cb: Vec<char> = b.chars().collect();
            prop_assert_eq!(ed(&a, &b), oracle(&ca, &cb));
        }

        #[test]
        fn relative_distance_in_unit_interval(a in "[a-d]{0,8}", b in "[a-d]{1,8}") {
            let r = relative_char_distance(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn morphological_features_symmetric(a in translation_set(), b in translation_set()) {
            prop_assert_eq!(duplicate_word(&a, &b), duplicate_word(&b, &a));
            prop_assert_eq!(subsequence(&a, &b), subsequence(&b, &a));
            prop_assert_eq!(first_characters_match(&a, &b), first_characters_match(&b, &a));
            prop_assert_eq!(abbreviation_match(&a, &b), abbreviation_match(&b, &a));
        }

        #[test]
        fn duplicate_and_subsequence_monotone(a in translation_set(), b in translation_set(), extra in translation_set()) {
            let mut grown = a.clone();
            grown.extend(extra);
            prop_assert!(duplicate_word(&grown, &b) >= duplicate_word(&a, &b));
            prop_assert!(subsequence(&grown, &b) >= subsequence(&a, &b));
        }
    }
}
