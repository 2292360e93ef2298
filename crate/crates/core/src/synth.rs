//! Seeded synthetic benchmark: bilingual term pairs with planted signal and
//! every resource the thirteen features need.
//!
//! Positives are a term and a one-character perturbation of it (homophone
//! swap, same-radical swap, substitution that keeps the English name, or an
//! interior insertion/deletion). Negatives pair terms from two different
//! positives. The corpus behind feature 12 lets synonyms co-occur; the corpus
//! behind feature 13 places terms at random, so that feature carries no label
//! information.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bundled;
use crate::error::{Error, Result};
use crate::model::{ResourceBundle, DEFAULT_NGD_MAX};
use crate::resources::{
    write_dataset, write_embeddings, write_pinyin_table, write_radical_table, Dataset,
    EmbeddingTable, PinyinTable, RadicalTable, TranslationLexicon,
};
use crate::string_feats::SetAggregation;
use crate::types::{FeatureId, Label, LabeledPair, Term};
use crate::web_dist::{build_corpus_index, CorpusProvider, DEFAULT_LOG_M};

/// The feature whose provider sees label-independent data.
pub const NOISE_FEATURE: FeatureId = FeatureId::NGD_SECONDARY;

/// Features whose signal the generator plants in the Chinese surface forms.
pub const PLANTED_FEATURES: [FeatureId; 3] = [
    FeatureId::ZH_EDIT_DISTANCE,
    FeatureId::PINYIN_EDIT_DISTANCE,
    FeatureId::COMMON_RADICALS,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub positives: usize,
    pub seed: u64,
    /// Chance that a term has no English translation.
    pub untranslated_rate: f64,
    /// Share of negatives pairing two terms of one morpheme family.
    pub hard_negative_rate: f64,
    /// Chance that a character has a Chinese embedding.
    pub zh_coverage: f64,
    /// Chance that a positive pair co-occurs in the informative corpus.
    pub cooccurrence_rate: f64,
    pub embedding_dim: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            positives: 300,
            seed: 0,
            untranslated_rate: 0.05,
            hard_negative_rate: 0.6,
            zh_coverage: 0.7,
            cooccurrence_rate: 0.65,
            embedding_dim: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Perturbation {
    Homophone,
    SharedRadical,
    SharedTranslation,
    Edit,
}

/// Generated dataset plus the raw resources behind a [`ResourceBundle`].
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub dataset: Dataset,
    pub perturbations: Vec<Perturbation>,
    pub zh_embeddings: EmbeddingTable,
    pub en_embeddings: EmbeddingTable,
    pub pinyin: PinyinTable,
    pub radicals: RadicalTable,
    pub primary_documents: Vec<String>,
    pub secondary_documents: Vec<String>,
}

struct Alphabet {
    chars: Vec<char>,
    homophones: BTreeMap<char, Vec<char>>,
    same_radical: BTreeMap<char, Vec<char>>,
}

impl Alphabet {
    fn new(pinyin: &PinyinTable, radicals: &RadicalTable) -> Self {
        let chars = bundled::characters();
        let group = |key: &dyn Fn(char) -> Option<String>| {
            let mut by_key: BTreeMap<String, Vec<char>> = BTreeMap::new();
            for &c in &chars {
                if let Some(k) = key(c) {
                    by_key.entry(k).or_default().push(c);
                }
            }
            let mut out = BTreeMap::new();
            for members in by_key.values() {
                for &c in members {
                    let others: Vec<char> = members.iter().copied().filter(|&o| o != c).collect();
                    if !others.is_empty() {
                        out.insert(c, others);
                    }
                }
            }
            out
        };
        let homophones = group(&|c| pinyin.get(c).map(str::to_string));
        let same_radical = group(&|c| radicals.get(c).map(|r| r.to_string()));
        Alphabet {
            chars,
            homophones,
            same_radical,
        }
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> char {
        *self.chars.choose(rng).expect("alphabet is non-empty")
    }
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    const CONSONANTS: &[u8] = b"bcdfghklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
        w.push(*VOWELS.choose(rng).unwrap() as char);
    }
    w.push(*CONSONANTS.choose(rng).unwrap() as char);
    w
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, normal: &Normal<f64>) -> Vec<f64> {
    (0..dim).map(|_| normal.sample(rng)).collect()
}

/// English gloss of every bundled character; terms translate word by word,
/// so terms sharing characters share English words too.
struct Glossary {
    words: BTreeMap<char, String>,
}

impl Glossary {
    fn new(rng: &mut ChaCha8Rng, chars: &[char]) -> Self {
        let mut taken = std::collections::HashSet::new();
        let mut words = BTreeMap::new();
        for &c in chars {
            let w = loop {
                let w = pseudo_word(rng);
                if taken.insert(w.clone()) {
                    break w;
                }
            };
            words.insert(c, w);
        }
        Glossary { words }
    }

    /// Title-cased names behave like eponyms: their capitals abbreviate them.
    fn translate(&self, surface: &str, rng: &mut ChaCha8Rng) -> String {
        let mut words: Vec<String> = surface.chars().map(|c| self.words[&c].clone()).collect();
        if rng.random_bool(0.3) {
            let i = rng.random_range(0..words.len());
            words[i] = synonym(&words[i]);
        }
        if rng.random_bool(0.9) {
            words = words.iter().map(|w| capitalize(w)).collect();
        }
        words.join(" ")
    }
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn synonym(word: &str) -> String {
    format!("{word}al")
}

/// Builds the whole synthetic benchmark from `cfg.seed`.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCorpus> {
    if cfg.positives < 4 {
        return Err(Error::invalid("synthetic set needs at least 4 positives"));
    }
    for (name, p) in [
        ("untranslated_rate", cfg.untranslated_rate),
        ("hard_negative_rate", cfg.hard_negative_rate),
        ("zh_coverage", cfg.zh_coverage),
        ("cooccurrence_rate", cfg.cooccurrence_rate),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} {p} outside [0, 1]")));
        }
    }
    if cfg.embedding_dim == 0 {
        return Err(Error::invalid("embedding dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let pinyin = bundled::pinyin_table();
    let radicals = bundled::radical_table();
    let alphabet = Alphabet::new(&pinyin, &radicals);
    let glossary = Glossary::new(&mut rng, &alphabet.chars);

    // Small morpheme pools group terms into families that differ only in
    // their middle character; hard negatives are drawn from one family.
    let morpheme = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.random_range(1..=2);
        (0..n).map(|_| alphabet.random(rng)).collect()
    };
    let prefixes: Vec<String> = (0..12).map(|_| morpheme(&mut rng)).collect();
    let suffixes: Vec<String> = (0..6).map(|_| morpheme(&mut rng)).collect();

    let mut seen = std::collections::HashSet::new();
    let mut positives: Vec<(Term, Term)> = Vec::new();
    let mut families: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut perturbations = Vec::new();
    while positives.len() < cfg.positives {
        let family = (
            rng.random_range(0..prefixes.len()),
            rng.random_range(0..suffixes.len()),
        );
        let surface: Vec<char> = format!(
            "{}{}{}",
            prefixes[family.0],
            alphabet.random(&mut rng),
            suffixes[family.1]
        )
        .chars()
        .collect();
        let kind = match rng.random_range(0..100) {
            0..30 => Perturbation::Homophone,
            30..65 => Perturbation::SharedRadical,
            65..80 => Perturbation::SharedTranslation,
            _ => Perturbation::Edit,
        };
        let Some((variant, kind)) = perturb(&surface, kind, &alphabet, &mut rng) else {
            continue;
        };
        let a: String = surface.iter().collect();
        let b: String = variant.iter().collect();
        if a == b || a.contains(&b) || b.contains(&a) || seen.contains(&a) || seen.contains(&b) {
            continue;
        }
        seen.insert(a.clone());
        seen.insert(b.clone());

        let ta = vec![glossary.translate(&a, &mut rng)];
        // Dictionaries often list the partner's rendering as an alternative.
        let tb = if kind == Perturbation::SharedTranslation {
            ta.clone()
        } else if rng.random_bool(0.6) {
            vec![glossary.translate(&b, &mut rng), ta[0].clone()]
        } else {
            vec![glossary.translate(&b, &mut rng)]
        };
        let drop = |rng: &mut ChaCha8Rng, t: Vec<String>| {
            if rng.random_bool(cfg.untranslated_rate) {
                Vec::new()
            } else {
                t
            }
        };
        let ta = drop(&mut rng, ta);
        let tb = drop(&mut rng, tb);
        families.entry(family).or_default().push(positives.len());
        positives.push((Term::new(a, ta)?, Term::new(b, tb)?));
        perturbations.push(kind);
    }

    // Hard negatives share both morphemes (one character apart), share only
    // the prefix (two or more apart), or pair a term with a look-alike that
    // swaps two characters for homophones or
    // same-radical characters.
    let n = positives.len();
    let mut by_prefix: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&(p, _), members) in &families {
        by_prefix.entry(p).or_default().extend(members);
    }
    let crowded: Vec<&Vec<usize>> = families.values().filter(|m| m.len() >= 2).collect();
    let mut negatives: Vec<(Term, Term)> = Vec::new();
    let mut lookalikes: Vec<String> = Vec::new();
    let mut used = std::collections::HashSet::new();
    let pick = |k: usize, rng: &mut ChaCha8Rng| {
        let (a, b) = &positives[k];
        if rng.random_bool(0.5) {
            a.clone()
        } else {
            b.clone()
        }
    };
    while negatives.len() < n {
        let hard = !crowded.is_empty() && rng.random_bool(cfg.hard_negative_rate);
        let (i, j) = match (hard, rng.random_range(0..3)) {
            (false, _) => (rng.random_range(0..n), rng.random_range(0..n)),
            (true, 2) => {
                let a = pick(rng.random_range(0..n), &mut rng);
                let surface: Vec<char> = a.surface().chars().collect();
                let Some(b) = lookalike(&surface, &alphabet, &mut rng) else {
                    continue;
                };
                let b: String = b.into_iter().collect();
                if seen.contains(&b) || a.surface().contains(&b) || b.contains(a.surface()) {
                    continue;
                }
                seen.insert(b.clone());
                let tb = if rng.random_bool(cfg.untranslated_rate) {
                    Vec::new()
                } else {
                    vec![glossary.translate(&b, &mut rng)]
                };
                lookalikes.push(b.clone());
                negatives.push((a, Term::new(b, tb)?));
                continue;
            }
            (true, family) => {
                let members = if family == 0 {
                    *crowded.choose(&mut rng).unwrap()
                } else {
                    by_prefix
                        .get(&families_prefix(&families, &mut rng))
                        .unwrap()
                };
                if members.len() < 2 {
                    continue;
                }
                let pair = rand::seq::index::sample(&mut rng, members.len(), 2);
                (members[pair.index(0)], members[pair.index(1)])
            }
        };
        if i == j || !used.insert((i.min(j), i.max(j))) {
            continue;
        }
        let a = pick(i, &mut rng);
        let b = pick(j, &mut rng);
        negatives.push((a, b));
    }

    let mut zh_embeddings = EmbeddingTable::new(cfg.embedding_dim)?;
    for &c in &alphabet.chars {
        let v = random_vector(&mut rng, cfg.embedding_dim, &normal);
        if rng.random_bool(cfg.zh_coverage) {
            zh_embeddings.insert(c.to_string(), v)?;
        }
    }
    let mut en_embeddings = EmbeddingTable::new(cfg.embedding_dim)?;
    for w in glossary.words.values() {
        let v = random_vector(&mut rng, cfg.embedding_dim, &normal);
        let near: Vec<f64> = v
            .iter()
            .map(|x| x + 0.4 * normal.sample(&mut rng))
            .collect();
        en_embeddings.insert(w.clone(), v)?;
        en_embeddings.insert(synonym(w), near)?;
    }

    let terms: Vec<String> = positives
        .iter()
        .flat_map(|(a, b)| [a.surface().to_string(), b.surface().to_string()])
        .chain(lookalikes)
        .collect();
    let mut primary_documents = Vec::new();
    for (a, b) in &positives {
        if rng.random_bool(cfg.cooccurrence_rate) {
            for _ in 0..rng.random_range(1..=3) {
                let filler = terms.choose(&mut rng).unwrap();
                primary_documents.push(format!("{} {} {}", a.surface(), filler, b.surface()));
            }
        }
    }
    for t in &terms {
        for _ in 0..rng.random_range(1..=4) {
            let filler = terms.choose(&mut rng).unwrap();
            primary_documents.push(format!("{t} {filler}"));
        }
    }
    primary_documents.shuffle(&mut rng);

    let mut secondary_documents = Vec::new();
    for _ in 0..(terms.len() * 3) {
        let doc: Vec<&str> = terms
            .choose_multiple(&mut rng, 30)
            .map(String::as_str)
            .collect();
        secondary_documents.push(doc.join(" "));
    }

    let mut pairs: Vec<LabeledPair> = positives
        .into_iter()
        .map(|(a, b)| LabeledPair::new(a, b, Label::Positive))
        .chain(
            negatives
                .into_iter()
                .map(|(a, b)| LabeledPair::new(a, b, Label::Negative)),
        )
        .collect();
    pairs.shuffle(&mut rng);

    Ok(SyntheticCorpus {
        dataset: Dataset::new(pairs),
        perturbations,
        zh_embeddings,
        en_embeddings,
        pinyin,
        radicals,
        primary_documents,
        secondary_documents,
    })
}

fn families_prefix(families: &BTreeMap<(usize, usize), Vec<usize>>, rng: &mut ChaCha8Rng) -> usize {
    let keys: Vec<&(usize, usize)> = families.keys().collect();
    keys.choose(rng).expect("at least one family").0
}

fn lookalike(surface: &[char], alphabet: &Alphabet, rng: &mut ChaCha8Rng) -> Option<Vec<char>> {
    let swappable =
        |c: &char| alphabet.homophones.contains_key(c) || alphabet.same_radical.contains_key(c);
    let positions: Vec<usize> = (0..surface.len())
        .filter(|&i| swappable(&surface[i]))
        .collect();
    if positions.len() < 2 {
        return None;
    }
    let mut out = surface.to_vec();
    for &i in positions.choose_multiple(rng, 2) {
        let table = match (
            alphabet.homophones.get(&out[i]),
            alphabet.same_radical.get(&out[i]),
        ) {
            (Some(h), Some(r)) => {
                if rng.random_bool(0.5) {
                    h
                } else {
                    r
                }
            }
            (Some(t), None) | (None, Some(t)) => t,
            (None, None) => return None,
        };
        out[i] = *table.choose(rng)?;
    }
    Some(out)
}

fn perturb(
    surface: &[char],
    kind: Perturbation,
    alphabet: &Alphabet,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<char>, Perturbation)> {
    let swap = |table: &BTreeMap<char, Vec<char>>, rng: &mut ChaCha8Rng| {
        let positions: Vec<usize> = (0..surface.len())
            .filter(|&i| table.contains_key(&surface[i]))
            .collect();
        let &i = positions.choose(rng)?;
        let mut out = surface.to_vec();
        out[i] = *table[&surface[i]].choose(rng)?;
        Some(out)
    };
    match kind {
        Perturbation::Homophone => swap(&alphabet.homophones, rng).map(|v| (v, kind)),
        Perturbation::SharedRadical => swap(&alphabet.same_radical, rng).map(|v| (v, kind)),
        Perturbation::SharedTranslation => {
            let mut out = surface.to_vec();
            let i = rng.random_range(0..out.len());
            out[i] = alphabet.random(rng);
            Some((out, kind))
        }
        Perturbation::Edit => {
            let mut out = surface.to_vec();
            if out.len() >= 4 && rng.random_bool(0.5) {
                out.remove(rng.random_range(1..out.len() - 1));
            } else {
                out.insert(rng.random_range(1..out.len()), alphabet.random(rng));
            }
            Some((out, kind))
        }
    }
}

impl SyntheticCorpus {
    /// Resource bundle over the generated tables and corpora.
    pub fn bundle(&self) -> Result<ResourceBundle> {
        let vocab = crate::resources::dataset_vocabulary(&self.dataset);
        let primary = build_corpus_index(&self.primary_documents, &vocab)?;
        let secondary = build_corpus_index(&self.secondary_documents, &vocab)?;
        Ok(ResourceBundle {
            zh_embeddings: self.zh_embeddings.clone(),
            en_embeddings: self.en_embeddings.clone(),
            pinyin: self.pinyin.clone(),
            radicals: self.radicals.clone(),
            lexicon: TranslationLexicon::default(),
            provider_primary: Box::new(CorpusProvider::new(primary, DEFAULT_LOG_M)?),
            provider_secondary: Box::new(CorpusProvider::new(secondary, DEFAULT_LOG_M)?),
            set_aggregation: SetAggregation::Max,
            ngd_max: DEFAULT_NGD_MAX,
        })
    }

    /// Writes every file the command-line tool reads:
    /// `pairs.tsv`, `zh.vec`, `en.vec`, `pinyin.tsv`, `radicals.tsv`,
    /// `corpus_primary.txt` and `corpus_secondary.txt`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };
        write_dataset(&self.dataset, create("pairs.tsv")?)?;
        write_embeddings(&self.zh_embeddings, create("zh.vec")?)?;
        write_embeddings(&self.en_embeddings, create("en.vec")?)?;
        write_pinyin_table(&self.pinyin, create("pinyin.tsv")?)?;
        write_radical_table(&self.radicals, create("radicals.tsv")?)?;
        for (name, docs) in [
            ("corpus_primary.txt", &self.primary_documents),
            ("corpus_secondary.txt", &self.secondary_documents),
        ] {
            let mut out = create(name)?;
            for d in docs {
                writeln!(out, "{d}")?;
            }
            out.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_deterministic() {
        let cfg = SynthConfig {
            positives: 40,
            seed: 3,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.dataset.positive_count(), 40);
        assert_eq!(a.dataset.negative_count(), 40);
        assert_eq!(a.dataset.fingerprint(), b.dataset.fingerprint());
        assert_eq!(a.secondary_documents, b.secondary_documents);
        let other = generate(&SynthConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.dataset.fingerprint(), other.dataset.fingerprint());
    }

    #[test]
    fn every_term_has_hits_in_both_corpora() {
        let c = generate(&SynthConfig {
            positives: 30,
            ..Default::default()
        })
        .unwrap();
        let bundle = c.bundle().unwrap();
        for p in c.dataset.pairs() {
            for t in [&p.a, &p.b] {
                assert!(bundle.provider_primary.hits(t.surface()) > 0);
                assert!(bundle.provider_secondary.hits(t.surface()) > 0);
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig {
            positives: 2,
            ..Default::default()
        })
        .is_err());
        assert!(generate(&SynthConfig {
            zh_coverage: 1.5,
            ..Default::default()
        })
        .is_err());
    }
}
