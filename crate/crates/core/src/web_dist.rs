//! Normalized web distance over pluggable hit-count providers, with an
//! offline provider backed by document frequencies of a local corpus.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default base-10 logarithm of the total page count.
pub const DEFAULT_LOG_M: f64 = 10.0;

/// Stand-in for a search engine: page hits for one term and for two terms.
pub trait HitCountProvider: Send + Sync {
    fn hits(&self, term: &str) -> u64;
    fn cohits(&self, x: &str, y: &str) -> u64;
    /// Base-10 logarithm of the total number of pages.
    fn log_m(&self) -> f64;
}

/// Outcome of one distance evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ngd {
    /// Finite distance; `clamped` records that a negative raw value was raised to 0.
    Distance { value: f64, clamped: bool },
    /// Both terms occur but never together.
    Infinite,
    /// At least one term has no hits.
    Undefined,
}

impl Ngd {
    /// Feature value with the infinite case capped at `cap`.
    pub fn capped(self, cap: f64) -> Option<f64> {
        match self {
            Ngd::Distance { value, .. } => Some(value.min(cap)),
            Ngd::Infinite => Some(cap),
            Ngd::Undefined => None,
        }
    }
}

pub fn ngd<P: HitCountProvider + ?Sized>(x: &str, y: &str, provider: &P) -> Result<Ngd> {
    let (fx, fy) = (provider.hits(x), provider.hits(y));
    let log_m = provider.log_m();
    let top = fx.max(fy);
    if top > 0 && log_m <= (top as f64).log10() {
        return Err(Error::invalid(format!(
            "hit count {top} is not below the page total 10^{log_m}"
        )));
    }
    if fx == 0 || fy == 0 {
        return Ok(Ngd::Undefined);
    }
    let fxy = provider.cohits(x, y);
    if fxy == 0 {
        return Ok(Ngd::Infinite);
    }
    let (lx, ly, lxy) = (
        (fx as f64).log10(),
        (fy as f64).log10(),
        (fxy as f64).log10(),
    );
    let raw = (lx.max(ly) - lxy) / (log_m - lx.min(ly));
    Ok(if raw < 0.0 {
        Ngd::Distance {
            value: 0.0,
            clamped: true,
        }
    } else {
        Ngd::Distance {
            value: raw,
            clamped: false,
        }
    })
}

/// Document frequencies and pairwise co-document frequencies of a vocabulary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusIndex {
    ids: HashMap<String, u32>,
    terms: Vec<String>,
    document_frequency: Vec<u64>,
    co_document_frequency: HashMap<(u32, u32), u64>,
    total_documents: u64,
}

fn check_term(term: &str) -> Result<()> {
    if term.is_empty() || term.contains(['\t', '\n', '\r', '\u{1f}']) {
        return Err(Error::invalid(format!(
            "vocabulary term {term:?} is empty or contains a separator"
        )));
    }
    Ok(())
}

/// Counts, for every vocabulary term and every co-occurring pair, the number
/// of documents that contain them as substrings. Repeats within a document
/// count once.
pub fn build_corpus_index<I, D, S>(documents: I, vocabulary: &[S]) -> Result<CorpusIndex>
where
    I: IntoIterator<Item = D>,
    D: AsRef<str>,
    S: AsRef<str>,
{
    let mut terms: Vec<String> = vocabulary.iter().map(|s| s.as_ref().to_string()).collect();
    terms.sort_unstable();
    terms.dedup();
    if terms.is_empty() {
        return Err(Error::invalid("corpus index needs a non-empty vocabulary"));
    }
    for t in &terms {
        check_term(t)?;
    }
    let ids: HashMap<String, u32> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    let mut df = vec![0u64; terms.len()];
    let mut codf: HashMap<(u32, u32), u64> = HashMap::new();
    let mut total = 0u64;
    let mut present = Vec::new();
    for doc in documents {
        let doc = doc.as_ref();
        total += 1;
        present.clear();
        present.extend(
            terms
                .iter()
                .enumerate()
                .filter(|(_, t)| doc.contains(t.as_str()))
                .map(|(i, _)| i as u32),
        );
        for (k, &i) in present.iter().enumerate() {
            df[i as usize] += 1;
            for &j in &present[k + 1..] {
                *codf.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    Ok(CorpusIndex {
        ids,
        terms,
        document_frequency: df,
        co_document_frequency: codf,
        total_documents: total,
    })
}

impl CorpusIndex {
    pub fn total_documents(&self) -> u64 {
        self.total_documents
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.terms
    }

    pub fn document_frequency(&self, term: &str) -> u64 {
        self.ids
            .get(term)
            .map_or(0, |&i| self.document_frequency[i as usize])
    }

    pub fn co_document_frequency(&self, x: &str, y: &str) -> u64 {
        let (Some(&i), Some(&j)) = (self.ids.get(x), self.ids.get(y)) else {
            return 0;
        };
        if i == j {
            return self.document_frequency[i as usize];
        }
        let key = (i.min(j), i.max(j));
        self.co_document_frequency.get(&key).copied().unwrap_or(0)
    }

    /// Highest document frequency of any term.
    pub fn max_document_frequency(&self) -> u64 {
        self.document_frequency.iter().copied().max().unwrap_or(0)
    }

    /// Writes the `#DF` / `#CODF` / `#TOTAL` TSV. Pairs are keyed as
    /// `termA<US>termB` with the terms in lexicographic order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "#DF")?;
        for (t, n) in self.terms.iter().zip(&self.document_frequency) {
            writeln!(out, "{t}\t{n}")?;
        }
        writeln!(out, "#CODF")?;
        let mut pairs: Vec<_> = self.co_document_frequency.iter().collect();
        pairs.sort_unstable();
        for (&(i, j), n) in pairs {
            writeln!(
                out,
                "{}\u{1f}{}\t{n}",
                self.terms[i as usize], self.terms[j as usize]
            )?;
        }
        writeln!(out, "#TOTAL")?;
        writeln!(out, "{}", self.total_documents)?;
        Ok(())
    }

    pub fn load_tsv<R: BufRead>(source: R) -> Result<CorpusIndex> {
        #[derive(PartialEq)]
        enum Section {
            None,
            Df,
            Codf,
            Total,
        }
        let mut section = Section::None;
        let mut df_rows: Vec<(String, u64)> = Vec::new();
        let mut codf_rows: Vec<(String, String, u64, usize)> = Vec::new();
        let mut total: Option<u64> = None;
        for (i, line) in source.lines().enumerate() {
            let n = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            match line {
                "#DF" => section = Section::Df,
                "#CODF" => section = Section::Codf,
                "#TOTAL" => section = Section::Total,
                "" => {}
                _ => {
                    let count = |s: &str| {
                        s.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::parse(n, format!("bad count {s:?}")))
                    };
                    match section {
                        Section::None => {
                            return Err(Error::parse(n, "row before any section header"))
                        }
                        Section::Total => {
                            if total.is_some() {
                                return Err(Error::parse(n, "#TOTAL holds a single number"));
                            }
                            total = Some(count(line)?);
                        }
                        Section::Df | Section::Codf => {
                            let (key, value) = line
                                .split_once('\t')
                                .ok_or_else(|| Error::parse(n, "expected key<TAB>count"))?;
                            let value = count(value)?;
                            if section == Section::Df {
                                check_term(key).map_err(|e| Error::parse(n, e.to_string()))?;
                                df_rows.push((key.to_string(), value));
                            } else {
                                let (a, b) = key.split_once('\u{1f}').ok_or_else(|| {
                                    Error::parse(n, "pair key needs a unit separator")
                                })?;
                                if a >= b {
                                    return Err(Error::parse(
                                        n,
                                        "pair terms must be in lexicographic order",
                                    ));
                                }
                                codf_rows.push((a.to_string(), b.to_string(), value, n));
                            }
                        }
                    }
                }
            }
        }
        let total = total.ok_or_else(|| Error::invalid("index file lacks a #TOTAL section"))?;
        let vocab: Vec<&str> = df_rows.iter().map(|(t, _)| t.as_str()).collect();
        let mut index = build_corpus_index(std::iter::empty::<&str>(), &vocab)?;
        if index.terms.len() != df_rows.len() {
            return Err(Error::invalid("duplicate term in #DF section"));
        }
        index.total_documents = total;
        for (t, v) in &df_rows {
            if *v > total {
                return Err(Error::invalid(format!(
                    "df({t}) exceeds the document total"
                )));
            }
            let id = index.ids[t];
            index.document_frequency[id as usize] = *v;
        }
        for (a, b, v, n) in codf_rows {
            let (Some(&i), Some(&j)) = (index.ids.get(&a), index.ids.get(&b)) else {
                return Err(Error::parse(n, "pair term missing from #DF"));
            };
            if v > index.document_frequency[i as usize].min(index.document_frequency[j as usize]) {
                return Err(Error::parse(n, "co-frequency exceeds a term frequency"));
            }
            if index.co_document_frequency.insert((i, j), v).is_some() {
                return Err(Error::parse(n, "duplicate pair"));
            }
        }
        Ok(index)
    }
}

/// Offline provider: hits are document frequencies of a [`CorpusIndex`].
#[derive(Debug, Clone)]
pub struct CorpusProvider {
    index: CorpusIndex,
    log_m: f64,
}

impl CorpusProvider {
    /// Fails when `log_m` does not exceed the log of the largest hit count,
    /// which would leave the distance undefined.
    pub fn new(index: CorpusIndex, log_m: f64) -> Result<Self> {
        let top = index.max_document_frequency();
        if !log_m.is_finite() || (top > 0 && log_m <= (top as f64).log10()) || log_m <= 0.0 {
            return Err(Error::invalid(format!(
                "log M = {log_m} must exceed log10 of the largest hit count ({top})"
            )));
        }
        Ok(CorpusProvider { index, log_m })
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }
}

impl HitCountProvider for CorpusProvider {
    fn hits(&self, term: &str) -> u64 {
        self.index.document_frequency(term)
    }

    fn cohits(&self, x: &str, y: &str) -> u64 {
        self.index.co_document_frequency(x, y)
    }

    fn log_m(&self) -> f64 {
        self.log_m
    }
}

/// One document per non-blank line.
pub fn read_documents_lines<R: BufRead>(source: R) -> Result<Vec<String>> {
    let mut docs = Vec::new();
    for line in source.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            docs.push(line);
        }
    }
    Ok(docs)
}

/// One document per regular file, read in file-name order.
pub fn read_documents_dir(dir: &Path) -> Result<Vec<String>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file());
    paths.sort();
    paths
        .iter()
        .map(|p| std::fs::read_to_string(p).map_err(Error::from))
        .collect()
}
