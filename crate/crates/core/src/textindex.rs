//! Inverted index over user questions with Okapi BM25 scoring.
//!
//! ```text
//! score(q, d) = Σ_t IDF(t) · f(t,d)·(k1+1) / (f(t,d) + k1·(1 − b + b·|d|/avgdl))
//! IDF(t)      = ln(1 + (N − df_t + 0.5) / (df_t + 0.5))
//! ```
//!
//! The sum runs over the distinct terms of the query. This IDF variant is
//! strictly positive, so a document scores zero exactly when it shares no
//! term with the query; such documents are never returned by retrieval.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Error::InvalidInput(format!("k1 must be >= 0, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidInput(format!("b must be in [0, 1], got {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<Posting>>,
    total_length: u64,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
}

impl InvertedIndex {
    /// Indexes every token of every question in the corpus.
    pub fn build(corpus: &Corpus) -> Self {
        let mut index = InvertedIndex {
            doc_ids: Vec::with_capacity(corpus.len()),
            doc_lengths: Vec::with_capacity(corpus.len()),
            postings: BTreeMap::new(),
            total_length: 0,
            lookup: HashMap::with_capacity(corpus.len()),
        };
        for q in corpus.iter() {
            let doc = index.doc_ids.len() as u32;
            index.doc_ids.push(q.id().to_string());
            index.lookup.insert(q.id().to_string(), doc);
            index.doc_lengths.push(q.tokens().len() as u32);
            index.total_length += q.tokens().len() as u64;

            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in q.tokens() {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (term, count) in tf {
                index
                    .postings
                    .entry(term.to_string())
                    .or_default()
                    .push(Posting { doc, tf: count });
            }
        }
        index
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.doc_ids.is_empty() {
            0.0
        } else {
            self.total_length as f64 / self.doc_ids.len() as f64
        }
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.lookup.contains_key(doc_id)
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u32> {
        self.lookup.get(doc_id).map(|&d| self.doc_lengths[d as usize])
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_ids.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, params: &Bm25Params, idf: f64, tf: u32, doc_len: u32) -> f64 {
        let tf = tf as f64;
        let norm = params.k1 * (1.0 - params.b + params.b * doc_len as f64 / self.avg_doc_length());
        idf * (tf * (params.k1 + 1.0)) / (tf + norm)
    }

    /// BM25 score of one document for a query.
    pub fn bm25_score<S: AsRef<str>>(
        &self,
        params: &Bm25Params,
        query: &[S],
        doc_id: &str,
    ) -> Result<f64> {
        let &doc = self
            .lookup
            .get(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let doc_len = self.doc_lengths[doc as usize];
        let mut score = 0.0;
        for term in distinct_terms(query) {
            let postings = self.postings(term);
            // postings are stored in ascending doc order
            if let Ok(pos) = postings.binary_search_by_key(&doc, |p| p.doc) {
                let idf = self.idf(postings.len());
                score += self.term_weight(params, idf, postings[pos].tf, doc_len);
            }
        }
        Ok(score)
    }

    /// Up to `k` documents with positive score, best first. Ties are broken
    /// by ascending document id.
    pub fn retrieve_top_k<S: AsRef<str>>(
        &self,
        params: &Bm25Params,
        query: &[S],
        k: usize,
    ) -> Vec<(String, f64)> {
        if k == 0 || self.doc_ids.is_empty() {
            return Vec::new();
        }
        let mut acc: HashMap<u32, f64> = HashMap::new();
        for term in distinct_terms(query) {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(postings.len());
            for p in postings {
                let w = self.term_weight(params, idf, p.tf, self.doc_lengths[p.doc as usize]);
                *acc.entry(p.doc).or_insert(0.0) += w;
            }
        }
        let mut scored: Vec<(u32, f64)> = acc.into_iter().filter(|&(_, s)| s > 0.0).collect();
        let cmp = |a: &(u32, f64), b: &(u32, f64)| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.doc_ids[a.0 as usize].cmp(&self.doc_ids[b.0 as usize]))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_unstable_by(cmp);
        scored
            .into_iter()
            .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::io(path, e.into()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut index: InvertedIndex = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            })?;
        index.lookup = index
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(index)
    }
}

fn distinct_terms<S: AsRef<str>>(query: &[S]) -> impl Iterator<Item = &str> {
    let mut seen = HashSet::new();
    query
        .iter()
        .map(AsRef::as_ref)
        .filter(move |t| seen.insert(*t))
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
                .map(|(i, t)| Question::new(format!("d{}", i + 1), *t, QuestionKind::UserQuestion))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn build_two_docs() {
        let idx = InvertedIndex::build(&corpus(&["a b", "b c"]));
        assert_eq!(idx.postings("a"), &[Posting { doc: 0, tf: 1 }]);
        assert_eq!(
            idx.postings("b"),
            &[Posting { doc: 0, tf: 1 }, Posting { doc: 1, tf: 1 }]
        );
        assert_eq!(idx.postings("c"), &[Posting { doc: 1, tf: 1 }]);
        assert_eq!(idx.avg_doc_length(), 2.0);
    }

    #[test]
    fn build_empty_and_repeated() {
        let idx = InvertedIndex::build(&Corpus::default());
        assert_eq!(idx.doc_count(), 0);
        assert!(idx.retrieve_top_k(&Bm25Params::default(), &["a"], 10).is_empty());

        let idx = InvertedIndex::build(&corpus(&["b b b"]));
        assert_eq!(idx.postings("b"), &[Posting { doc: 0, tf: 3 }]);
        assert_eq!(idx.doc_length("d1"), Some(3));
    }

    #[test]
    fn single_doc_score_matches_hand_value() {
        let idx = InvertedIndex::build(&corpus(&["hello world"]));
        let s = idx
            .bm25_score(&Bm25Params::default(), &["hello"], "d1")
            .unwrap();
        let expected = (4.0f64 / 3.0).ln();
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.287682).abs() < 1e-6);
    }

    #[test]
    fn no_shared_term_scores_zero() {
        let idx = InvertedIndex::build(&corpus(&["hello world", "other"]));
        assert_eq!(
            idx.bm25_score(&Bm25Params::default(), &["zzz"], "d1").unwrap(),
            0.0
        );
    }

    #[test]
    fn unknown_doc_is_error() {
        let idx = InvertedIndex::build(&corpus(&["x"]));
        assert!(matches!(
            idx.bm25_score(&Bm25Params::default(), &["x"], "nope"),
            Err(Error::UnknownDocument(_))
        ));
    }

    #[test]
    fn up_to_k_semantics() {
        let idx = InvertedIndex::build(&corpus(&["apply job", "job fair", "pets"]));
        let hits = idx.retrieve_top_k(&Bm25Params::default(), &["job"], 10);
        assert_eq!(hits.len(), 2);
    }

    #[test]
    fn exact_doc_query_ranks_alone() {
        let idx = InvertedIndex::build(&corpus(&["alpha beta", "gamma delta", "epsilon"]));
        let hits = idx.retrieve_top_k(&Bm25Params::default(), &["gamma", "delta"], 10);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, "d2");
    }

    #[test]
    fn ties_break_by_id() {
        let idx = InvertedIndex::build(&corpus(&["x y", "x y", "x y"]));
        let hits = idx.retrieve_top_k(&Bm25Params::default(), &["x"], 2);
        assert_eq!(hits.iter().map(|h| h.0.as_str()).collect::<Vec<_>>(), ["d1", "d2"]);
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("idx.json");
        let idx = InvertedIndex::build(&corpus(&["where are you located ?", "how to apply"]));
        idx.save(&path).unwrap();
        let back = InvertedIndex::load(&path).unwrap();
        assert_eq!(back, idx);
        assert!(back.contains("d2"));
    }

    #[test]
    fn params_validated() {
        assert!(Bm25Params::new(-1.0, 0.5).is_err());
        assert!(Bm25Params::new(1.0, 1.5).is_err());
        assert!(Bm25Params::new(0.0, 0.0).is_ok());
    }
}
