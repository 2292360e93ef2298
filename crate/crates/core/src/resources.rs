//! Loading and validation of datasets, embedding tables and dictionaries,
//! plus the stratified train/test split.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{dedup_translations, Label, LabeledPair, Term};

/// Separator joining multiple translations inside one TSV field.
pub const TRANSLATION_SEPARATOR: &str = "||";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pairs: Vec<LabeledPair>,
    positive_count: usize,
    negative_count: usize,
}

impl Dataset {
    pub fn new(pairs: Vec<LabeledPair>) -> Self {
        let positive_count = pairs.iter().filter(|p| p.label.is_positive()).count();
        let negative_count = pairs.len() - positive_count;
        Dataset {
            pairs,
            positive_count,
            negative_count,
        }
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positive_count(&self) -> usize {
        self.positive_count
    }

    pub fn negative_count(&self) -> usize {
        self.negative_count
    }

    pub fn labels(&self) -> Vec<Label> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    /// Sub-dataset made of the given row indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.pairs[i].clone()).collect())
    }

    /// SHA-256 of the canonical TSV serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        write_dataset(self, &mut buf).expect("writing to a Vec cannot fail");
        let digest = Sha256::digest(&buf);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn split_translations(field: &str) -> Vec<String> {
    dedup_translations(field.split(TRANSLATION_SEPARATOR))
}

/// Reads the five-column dataset TSV:
/// `term_a  term_b  label(0|1)  translations_a  translations_b`.
pub fn load_dataset<R: BufRead>(source: R) -> Result<Dataset> {
    let mut pairs = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(
                line_no,
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let label = match cols[2].trim() {
            "1" => Label::Positive,
            "0" => Label::Negative,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let a = Term::new(cols[0].trim(), split_translations(cols[3]))
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        let b = Term::new(cols[1].trim(), split_translations(cols[4]))
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        pairs.push(LabeledPair::new(a, b, label));
    }
    Ok(Dataset::new(pairs))
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for p in dataset.pairs() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.a.surface(),
            p.b.surface(),
            u8::from(p.label.is_positive()),
            p.a.translations().join(TRANSLATION_SEPARATOR),
            p.b.translations().join(TRANSLATION_SEPARATOR),
        )?;
    }
    Ok(())
}

/// Fraction of each class sent to the training side, kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TrainFraction {
    num: u64,
    den: u64,
}

impl TrainFraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::invalid(format!(
                "train fraction {num}/{den} must lie strictly between 0 and 1"
            )));
        }
        Ok(TrainFraction { num, den })
    }

    pub fn two_thirds() -> Self {
        TrainFraction { num: 2, den: 3 }
    }

    /// `floor(fraction * n)`, computed exactly.
    pub fn take_of(self, n: usize) -> usize {
        ((n as u128 * self.num as u128) / self.den as u128) as usize
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for TrainFraction {
    fn default() -> Self {
        TrainFraction::two_thirds()
    }
}

impl fmt::Display for TrainFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for TrainFraction {
    type Err = Error;

    /// Accepts `a/b` or a decimal such as `0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::invalid(format!("cannot parse train fraction {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return TrainFraction::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac_val: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int * den + frac_val;
        let g = gcd(num, den);
        TrainFraction::new(num / g.max(1), den / g.max(1))
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl TryFrom<String> for TrainFraction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TrainFraction> for String {
    fn from(f: TrainFraction) -> String {
        f.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: TrainFraction,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: TrainFraction::two_thirds(),
            seed: 0,
            stratified: true,
        }
    }
}

/// Row indices of the train and test sides, each in ascending order.
pub fn split_indices(dataset: &Dataset, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if cfg.stratified {
        if dataset.positive_count() == 0 || dataset.negative_count() == 0 {
            return Err(Error::invalid(
                "stratified split needs both positive and negative pairs",
            ));
        }
        [Label::Positive, Label::Negative]
            .iter()
            .map(|&label| {
                dataset
                    .pairs()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.label == label)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect()
    } else {
        vec![(0..dataset.len()).collect()]
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let k = cfg.train_fraction.take_of(group.len());
        train.extend_from_slice(&group[..k]);
        test.extend_from_slice(&group[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(dataset: &Dataset, cfg: &SplitConfig) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, cfg)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}

/// Dense word vectors keyed by token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(EmbeddingTable {
            dimension,
            entries: HashMap::new(),
        })
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        let token = token.into();
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite component for {token:?}"
            )));
        }
        if self.entries.contains_key(&token) {
            return Err(Error::invalid(format!("duplicate token {token:?}")));
        }
        self.entries.insert(token, vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Tokens in sorted order, for reproducible serialization.
    pub fn tokens(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }
}

/// Reads the text format: a `count dimension` header, then `token v1 ... vd` lines.
pub fn load_embeddings<R: BufRead>(source: R) -> Result<EmbeddingTable> {
    let mut lines = source.lines().enumerate();
    let (count, dimension) = loop {
        let Some((i, line)) = lines.next() else {
            return Err(Error::parse(1, "missing `count dimension` header"));
        };
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, "header must be `count dimension`"))
        };
        let count = parse(it.next())?;
        let dimension = parse(it.next())?;
        if it.next().is_some() || dimension == 0 {
            return Err(Error::parse(i + 1, "header must be `count dimension`"));
        }
        break (count, dimension);
    };
    let mut table = EmbeddingTable::new(dimension)?;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-blank line has a token");
        let vector = parts
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad component {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if vector.len() != dimension {
            return Err(Error::parse(
                line_no,
                format!("expected {dimension} components, found {}", vector.len()),
            ));
        }
        table
            .insert(token, vector)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
    }
    if table.len() != count {
        return Err(Error::invalid(format!(
            "header announces {count} vectors, file has {}",
            table.len()
        )));
    }
    Ok(table)
}

pub fn write_embeddings<W: Write>(table: &EmbeddingTable, mut out: W) -> Result<()> {
    writeln!(out, "{} {}", table.len(), table.dimension())?;
    for token in table.tokens() {
        write!(out, "{token}")?;
        for x in table.get(token).unwrap() {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Character to tone-stripped pinyin syllable (one reading per character).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PinyinTable {
    entries: HashMap<char, String>,
}

impl PinyinTable {
    pub fn get(&self, c: char) -> Option<&str> {
        self.entries.get(&c).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, c: char, syllable: &str) -> Result<()> {
        if syllable.is_empty()
            || !syllable
                .chars()
                .all(|ch| ch.is_ascii_lowercase() || ch == '\'')
        {
            return Err(Error::invalid(format!(
                "syllable {syllable:?} must be lowercase a-z (v for u-umlaut)"
            )));
        }
        if self.entries.contains_key(&c) {
            return Err(Error::invalid(format!("duplicate character {c}")));
        }
        self.entries.insert(c, syllable.to_string());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, &str)> {
        self.entries.iter().map(|(c, s)| (*c, s.as_str()))
    }
}

/// Character to radical.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadicalTable {
    entries: HashMap<char, char>,
}

impl RadicalTable {
    pub fn get(&self, c: char) -> Option<char> {
        self.entries.get(&c).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, c: char, radical: char) -> Result<()> {
        if self.entries.contains_key(&c) {
            return Err(Error::invalid(format!("duplicate character {c}")));
        }
        self.entries.insert(c, radical);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, char)> + '_ {
        self.entries.iter().map(|(c, r)| (*c, *r))
    }
}

/// Chinese term to ordered English translations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TranslationLexicon {
    entries: HashMap<String, Vec<String>>,
}

impl TranslationLexicon {
    pub fn get(&self, term: &str) -> Option<&[String]> {
        self.entries.get(term).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert<I, S>(&mut self, term: impl Into<String>, translations: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let term = term.into();
        let list = dedup_translations(translations);
        if list.is_empty() {
            return Err(Error::invalid(format!("no translations for {term:?}")));
        }
        if self.entries.contains_key(&term) {
            return Err(Error::invalid(format!("duplicate term {term:?}")));
        }
        self.entries.insert(term, list);
        Ok(())
    }

    pub fn terms(&self) -> Vec<&str> {
        let mut t: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        t.sort_unstable();
        t
    }
}

fn two_columns(line: &str, line_no: usize) -> Result<(&str, &str)> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 2 {
        return Err(Error::parse(
            line_no,
            format!("expected 2 tab-separated columns, found {}", cols.len()),
        ));
    }
    let (k, v) = (cols[0].trim(), cols[1].trim());
    if k.is_empty() || v.is_empty() {
        return Err(Error::parse(line_no, "empty key or value"));
    }
    Ok((k, v))
}

fn single_char(s: &str, line_no: usize) -> Result<char> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(Error::parse(
            line_no,
            format!("{s:?} is not a single character"),
        )),
    }
}

fn table_lines<R: BufRead>(
    source: R,
    mut handle: impl FnMut(&str, usize) -> Result<()>,
) -> Result<()> {
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        handle(line, i + 1)?;
    }
    Ok(())
}

pub fn load_pinyin_table<R: BufRead>(source: R) -> Result<PinyinTable> {
    let mut table = PinyinTable::default();
    table_lines(source, |line, n| {
        let (k, v) = two_columns(line, n)?;
        let c = single_char(k, n)?;
        table
            .insert(c, v)
            .map_err(|e| Error::parse(n, e.to_string()))
    })?;
    Ok(table)
}

pub fn load_radical_table<R: BufRead>(source: R) -> Result<RadicalTable> {
    let mut table = RadicalTable::default();
    table_lines(source, |line, n| {
        let (k, v) = two_columns(line, n)?;
        let c = single_char(k, n)?;
        let r = single_char(v, n)?;
        table
            .insert(c, r)
            .map_err(|e| Error::parse(n, e.to_string()))
    })?;
    Ok(table)
}

pub fn load_translation_lexicon<R: BufRead>(source: R) -> Result<TranslationLexicon> {
    let mut lexicon = TranslationLexicon::default();
    table_lines(source, |line, n| {
        let (k, v) = two_columns(line, n)?;
        lexicon
            .insert(k, v.split(TRANSLATION_SEPARATOR))
            .map_err(|e| Error::parse(n, e.to_string()))
    })?;
    Ok(lexicon)
}

pub fn write_pinyin_table<W: Write>(table: &PinyinTable, mut out: W) -> Result<()> {
    let mut rows: Vec<_> = table.iter().collect();
    rows.sort_unstable();
    for (c, s) in rows {
        writeln!(out, "{c}\t{s}")?;
    }
    Ok(())
}

pub fn write_radical_table<W: Write>(table: &RadicalTable, mut out: W) -> Result<()> {
    let mut rows: Vec<_> = table.iter().collect();
    rows.sort_unstable();
    for (c, r) in rows {
        writeln!(out, "{c}\t{r}")?;
    }
    Ok(())
}

pub fn write_translation_lexicon<W: Write>(lexicon: &TranslationLexicon, mut out: W) -> Result<()> {
    for term in lexicon.terms() {
        writeln!(
            out,
            "{term}\t{}",
            lexicon.get(term).unwrap().join(TRANSLATION_SEPARATOR)
        )?;
    }
    Ok(())
}

/// Every distinct surface string in the dataset, sorted.
pub fn dataset_vocabulary(dataset: &Dataset) -> Vec<String> {
    let set: HashSet<&str> = dataset
        .pairs()
        .iter()
        .flat_map(|p| [p.a.surface(), p.b.surface()])
        .collect();
    let mut v: Vec<String> = set.into_iter().map(str::to_string).collect();
    v.sort_unstable();
    v
}
