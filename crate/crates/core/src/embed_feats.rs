//! Word-vector features: cosine similarity of Chinese term vectors, cosine of
//! averaged English translation-set vectors, and Euclidean distance.

use crate::error::{Error, Result};
use crate::resources::EmbeddingTable;
use crate::types::Term;

/// A finite real vector with the dimension of its source table.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector(Vec<f64>);

impl TermVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("term vector has non-finite components"));
        }
        Ok(TermVector(components))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn same_len(a: &TermVector, b: &TermVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Exact lookup of the surface; otherwise the mean of the vectors of its
/// characters that the table knows. `None` when nothing is known.
pub fn lookup_term_vector(term: &Term, table: &EmbeddingTable) -> Option<TermVector> {
    if let Some(v) = table.get(term.surface()) {
        return Some(TermVector(v.to_vec()));
    }
    let mut buf = [0u8; 4];
    let known: Vec<TermVector> = term
        .surface()
        .chars()
        .filter_map(|c| table.get(c.encode_utf8(&mut buf)))
        .map(|v| TermVector(v.to_vec()))
        .collect();
    average_vector(&known).ok()
}

pub fn cosine_similarity(a: &TermVector, b: &TermVector) -> Result<f64> {
    same_len(a, b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine similarity of a zero vector"));
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub fn average_vector(vs: &[TermVector]) -> Result<TermVector> {
    let first = vs
        .first()
        .ok_or_else(|| Error::invalid("average of an empty vector list"))?;
    let mut acc = vec![0.0; first.len()];
    for v in vs {
        same_len(first, v)?;
        for (a, x) in acc.iter_mut().zip(&v.0) {
            *a += x;
        }
    }
    let n = vs.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(TermVector(acc))
}

pub fn euclidean_distance(a: &TermVector, b: &TermVector) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.0
        .iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Vector of one English translation: mean of its known lowercase tokens.
fn translation_vector(translation: &str, table: &EmbeddingTable) -> Option<TermVector> {
    let tokens: Vec<TermVector> = translation
        .split_whitespace()
        .filter_map(|w| {
            table
                .get(w)
                .or_else(|| table.get(&w.to_ascii_lowercase()))
                .map(|v| TermVector(v.to_vec()))
        })
        .collect();
    average_vector(&tokens).ok()
}

/// Average vector of a translation set, skipping unrepresentable translations.
pub fn set_vector(translations: &[String], table: &EmbeddingTable) -> Option<TermVector> {
    let vs: Vec<TermVector> = translations
        .iter()
        .filter_map(|t| translation_vector(t, table))
        .collect();
    average_vector(&vs).ok()
}

/// Cosine of the two sets' average vectors; `None` if either side has no
/// representable translation or averages to the zero vector.
pub fn set_cosine(a: &[String], b: &[String], table: &EmbeddingTable) -> Option<f64> {
    let va = set_vector(a, table)?;
    let vb = set_vector(b, table)?;
    cosine_similarity(&va, &vb).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> TermVector {
        TermVector::new(xs.to_vec()).unwrap()
    }

    fn toy_table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3).unwrap();
        t.insert("liver", vec![1.0, 0.0, 0.0]).unwrap();
        t.insert("cancer", vec![0.0, 1.0, 0.0]).unwrap();
        t.insert("carcinoma", vec![0.0, 0.8, 0.6]).unwrap();
        t.insert("肝", vec![1.0, 2.0, 0.0]).unwrap();
        t.insert("癌", vec![3.0, 0.0, 2.0]).unwrap();
        t.insert("肝癌", vec![9.0, 9.0, 9.0]).unwrap();
        t
    }

    #[test]
    fn cosine_analytic_cases() {
        let a = v(&[0.3, -1.2, 4.0]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let neg = v(&[-0.3, 1.2, -4.0]);
        assert!((cosine_similarity(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert!(cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])).is_err());
        assert!(cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn average_vector_examples() {
        assert_eq!(
            average_vector(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap(),
            v(&[0.5, 0.5])
        );
        assert_eq!(average_vector(&[v(&[2.0, -1.0])]).unwrap(), v(&[2.0, -1.0]));
        assert!(average_vector(&[]).is_err());
        assert!(average_vector(&[v(&[1.0]), v(&[1.0, 2.0])]).is_err());
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(
            euclidean_distance(&v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(),
            5.0
        );
        assert_eq!(
            euclidean_distance(&v(&[1.5, 2.0]), &v(&[1.5, 2.0])).unwrap(),
            0.0
        );
        assert!(euclidean_distance(&v(&[1.0]), &v(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn lookup_prefers_exact_token_then_characters() {
        let t = toy_table();
        let exact = lookup_term_vector(&Term::untranslated("肝癌").unwrap(), &t).unwrap();
        assert_eq!(exact, v(&[9.0, 9.0, 9.0]));
        let fallback = lookup_term_vector(&Term::untranslated("癌肝").unwrap(), &t).unwrap();
        assert_eq!(fallback, v(&[2.0, 1.0, 1.0]));
        let partial = lookup_term_vector(&Term::untranslated("胃癌").unwrap(), &t).unwrap();
        assert_eq!(partial, v(&[3.0, 0.0, 2.0]));
        assert!(lookup_term_vector(&Term::untranslated("胃").unwrap(), &t).is_none());
    }

    #[test]
    fn set_cosine_examples() {
        let t = toy_table();
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let same = set_cosine(&s(&["liver"]), &s(&["liver"]), &t).unwrap();
        assert!((same - 1.0).abs() < 1e-12);
        assert_eq!(set_cosine(&s(&[]), &s(&["liver"]), &t), None);
        assert_eq!(set_cosine(&s(&["unknown"]), &s(&["liver"]), &t), None);

        // Hand computation: "liver cancer" -> (0.5, 0.5, 0); "liver carcinoma" -> (0.5, 0.4, 0.3).
        // dot = 0.25 + 0.2 = 0.45; norms sqrt(0.5) and sqrt(0.5).
        let got = set_cosine(&s(&["liver cancer"]), &s(&["liver carcinoma"]), &t).unwrap();
        assert!((got - 0.9).abs() < 1e-12, "{got}");

        // Set average over two translations: {(1,0,0), (0,1,0)} -> (0.5, 0.5, 0).
        let got = set_cosine(&s(&["liver", "cancer"]), &s(&["liver cancer"]), &t).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 3)
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(a in vec3(), b in vec3(), lambda in 0.01f64..100.0) {
            let (a, b) = (v(&a), v(&b));
            prop_assume!(a.norm() > 1e-6 && b.norm() > 1e-6);
            let c = cosine_similarity(&a, &b).unwrap();
            prop_assert!((c - cosine_similarity(&b, &a).unwrap()).abs() < 1e-12);
            let scaled = v(&a.components().iter().map(|x| x * lambda).collect::<Vec<_>>());
            prop_assert!((cosine_similarity(&scaled, &b).unwrap() - c).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&c));
        }

        #[test]
        fn euclidean_metric_axioms(a in vec3(), b in vec3(), c in vec3()) {
            let (a, b, c) = (v(&a), v(&b), v(&c));
            let ab = euclidean_distance(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(euclidean_distance(&a, &a).unwrap(), 0.0);
            prop_assert!((ab - euclidean_distance(&b, &a).unwrap()).abs() < 1e-12);
            let ac = euclidean_distance(&a, &c).unwrap();
            let cb = euclidean_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
            if a != b { prop_assert!(ab > 0.0); }
        }

        #[test]
        fn average_of_copies_is_identity(a in vec3(), k in 1usize..8) {
            let copies = vec![v(&a); k];
            let avg = average_vector(&copies).unwrap();
            for (x, y) in avg.components().iter().zip(&a) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn set_cosine_permutation_invariant(perm in Just(["liver cancer", "carcinoma", "liver"]).prop_shuffle()) {
            let t = toy_table();
            let base: Vec<String> = ["liver cancer", "carcinoma", "liver"].iter().map(|s| s.to_string()).collect();
            let shuffled: Vec<String> = perm.iter().map(|s| s.to_string()).collect();
            let other = vec!["cancer".to_string()];
            let x = set_cosine(&base, &other, &t).unwrap();
            let y = set_cosine(&shuffled, &other, &t).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
