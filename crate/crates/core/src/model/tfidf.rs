use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tokenize::{preprocess, TokenizerConfig};
use crate::ingest::Repository;
use crate::{io, Error, Result};

/// Sparse vector with entries sorted by column.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// TF-IDF vectors of a keyed corpus.
///
/// `tf` is the raw term count, `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, and
/// every document vector is L2-normalized (empty documents stay zero).
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfIndex {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    vectors: BTreeMap<String, SparseVector>,
}

pub fn fit_tfidf(corpus: &BTreeMap<String, String>, cfg: &TokenizerConfig) -> Result<TfIdfIndex> {
    let docs: Vec<(&String, BTreeMap<String, usize>)> = corpus
        .iter()
        .map(|(key, text)| {
            let mut tf: BTreeMap<String, usize> = BTreeMap::new();
            for token in preprocess(text, cfg) {
                *tf.entry(token).or_default() += 1;
            }
            (key, tf)
        })
        .collect();

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, tf) in &docs {
        for token in tf.keys() {
            *df.entry(token).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let n = docs.len() as f64;
    let vocabulary: BTreeMap<String, usize> = df
        .keys()
        .enumerate()
        .map(|(i, t)| (t.to_string(), i))
        .collect();
    let idf: Vec<f64> = df
        .values()
        .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
        .collect();

    let vectors = docs
        .iter()
        .map(|(key, tf)| {
            // tf is keyed in token order, which is also column order
            let mut entries: Vec<(usize, f64)> = tf
                .iter()
                .map(|(t, &count)| {
                    let col = vocabulary[t];
                    (col, count as f64 * idf[col])
                })
                .collect();
            let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for e in &mut entries {
                    e.1 /= norm;
                }
            }
            ((*key).clone(), SparseVector { entries })
        })
        .collect();

    Ok(TfIdfIndex {
        vocabulary,
        idf,
        vectors,
    })
}

impl TfIdfIndex {
    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.vocabulary.get(token).map(|&c| self.idf[c])
    }

    pub fn vector(&self, key: &str) -> Option<&SparseVector> {
        self.vectors.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.vectors.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn require(&self, key: &str) -> Result<&SparseVector> {
        self.vectors
            .get(key)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))
    }

    /// Cosine similarity of two indexed documents, in `[0, 1]`.
    pub fn pair_similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (va, vb) = (self.require(a)?, self.require(b)?);
        if va.is_zero() || vb.is_zero() {
            return Ok(0.0);
        }
        Ok(va.dot(vb).clamp(0.0, 1.0))
    }
}

/// Title and description of every issue, keyed by issue key.
pub fn corpus_from_repo(repo: &Repository) -> BTreeMap<String, String> {
    repo.issues
        .values()
        .map(|i| (i.key.clone(), format!("{}\n{}", i.title, i.description)))
        .collect()
}

/// SHA-256 over the keyed corpus; identifies the documents an index was
/// built from.
pub fn corpus_hash(corpus: &BTreeMap<String, String>) -> String {
    let mut bytes = Vec::new();
    for (key, text) in corpus {
        bytes.extend_from_slice(key.as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(text.as_bytes());
        bytes.push(0);
    }
    io::sha256_hex(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tokenize::Stemmer;

    fn plain() -> TokenizerConfig {
        TokenizerConfig::new(true, Vec::<String>::new(), Stemmer::None)
    }

    fn corpus(docs: &[(&str, &str)]) -> BTreeMap<String, String> {
        docs.iter().map(|(k, t)| (k.to_string(), t.to_string())).collect()
    }

    #[test]
    fn idf_by_hand() {
        let idx = fit_tfidf(&corpus(&[("d1", "a b"), ("d2", "a")]), &plain()).unwrap();
        assert_eq!(idx.idf("a"), Some(1.0));
        assert_eq!(idx.idf("b"), Some((3.0f64 / 2.0).ln() + 1.0));
        // d1 = (1, idf_b) normalized
        let ib = (1.5f64).ln() + 1.0;
        let norm = (1.0 + ib * ib).sqrt();
        let v = idx.vector("d1").unwrap().entries();
        assert!((v[0].1 - 1.0 / norm).abs() < 1e-15);
        assert!((v[1].1 - ib / norm).abs() < 1e-15);
    }

    #[test]
    fn single_document_idf_is_one() {
        let idx = fit_tfidf(&corpus(&[("d", "x y z x")]), &plain()).unwrap();
        for t in ["x", "y", "z"] {
            assert_eq!(idx.idf(t), Some(1.0));
        }
    }

    #[test]
    fn ubiquitous_token_has_minimum_idf() {
        let idx = fit_tfidf(
            &corpus(&[("1", "common rare"), ("2", "common other"), ("3", "common other third")]),
            &plain(),
        )
        .unwrap();
        let min = idx.vocabulary().keys().map(|t| idx.idf(t).unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(idx.idf("common"), Some(min));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(fit_tfidf(&corpus(&[("a", ""), ("b", "  ")]), &plain()), Err(Error::EmptyVocabulary)));
        assert!(matches!(fit_tfidf(&BTreeMap::new(), &plain()), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn similarity_bounds() {
        let idx = fit_tfidf(
            &corpus(&[("a", "crash on start"), ("b", "crash on start"), ("c", "memory leak"), ("e", "")]),
            &plain(),
        )
        .unwrap();
        assert!((idx.pair_similarity("a", "b").unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(idx.pair_similarity("a", "c").unwrap(), 0.0);
        assert_eq!(idx.pair_similarity("a", "e").unwrap(), 0.0);
        assert!(idx.vector("e").unwrap().is_zero());
        assert!(matches!(idx.pair_similarity("a", "zz"), Err(Error::UnknownKey(_))));
        let n = idx.vector("c").unwrap().norm();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corpus_hash_changes_with_content() {
        let a = corpus(&[("k", "text")]);
        let b = corpus(&[("k", "text!")]);
        assert_ne!(corpus_hash(&a), corpus_hash(&b));
        assert_eq!(corpus_hash(&a), corpus_hash(&a.clone()));
    }
}
