//! Descriptive corpus statistics: first-word distribution, vocabulary size
//! and mean question length. Lengths count every token, punctuation
//! included.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

pub const DEFAULT_FIRST_WORD_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Percent of questions starting with each token, for tokens at or
    /// above the threshold.
    pub first_word_dist: BTreeMap<String, f64>,
    pub first_word_covered_percent: f64,
    pub vocab_size: usize,
    pub mean_length: f64,
    pub question_count: usize,
    pub threshold: f64,
}

impl CorpusStats {
    /// First-word entries, most frequent first (ties alphabetical).
    pub fn ranked_first_words(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .first_word_dist
            .iter()
            .map(|(k, &p)| (k.as_str(), p))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

pub fn corpus_stats(corpus: &Corpus, threshold: f64) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("corpus statistics need a non-empty corpus".into()));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!("threshold must be in [0, 1], got {threshold}")));
    }
    let n = corpus.len();
    let mut first: HashMap<&str, usize> = HashMap::new();
    let mut vocab: HashSet<&str> = HashSet::new();
    let mut total_len = 0usize;
    for q in corpus.iter() {
        if let Some(t) = q.tokens().first() {
            *first.entry(t.as_str()).or_default() += 1;
        }
        vocab.extend(q.tokens().iter().map(String::as_str));
        total_len += q.tokens().len();
    }
    // integer comparison avoids float drift at the threshold boundary
    let first_word_dist: BTreeMap<String, f64> = first
        .into_iter()
        .filter(|&(_, c)| c as f64 >= threshold * n as f64)
        .map(|(t, c)| (t.to_string(), 100.0 * c as f64 / n as f64))
        .collect();
    let first_word_covered_percent = first_word_dist.values().sum();
    Ok(CorpusStats {
        first_word_dist,
        first_word_covered_percent,
        vocab_size: vocab.len(),
        mean_length: total_len as f64 / n as f64,
        question_count: n,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Question, QuestionKind};

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| Question::new(i.to_string(), *t, QuestionKind::OrgFaq))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn first_word_percent() {
        let mut texts = vec!["how do i apply ?"; 3];
        texts.extend(["what is it ?"; 7]);
        let s = corpus_stats(&corpus(&texts), 0.02).unwrap();
        assert!((s.first_word_dist["how"] - 30.0).abs() < 1e-12);
        assert!((s.first_word_covered_percent - 100.0).abs() < 1e-12);
    }

    #[test]
    fn single_question() {
        let s = corpus_stats(&corpus(&["how do i apply ?"]), 0.02).unwrap();
        assert_eq!(s.vocab_size, 5);
        assert_eq!(s.mean_length, 5.0);
        assert_eq!(s.first_word_dist.len(), 1);
        assert_eq!(s.first_word_dist["how"], 100.0);
    }

    #[test]
    fn below_threshold_dropped() {
        let mut texts = vec!["what ?"; 99];
        texts.push("why ?");
        let s = corpus_stats(&corpus(&texts), 0.02).unwrap();
        assert!(!s.first_word_dist.contains_key("why"));
        assert!((s.first_word_covered_percent - 99.0).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(corpus_stats(&Corpus::default(), 0.02).is_err());
    }
}
