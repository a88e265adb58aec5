//! Pair matching between organizational FAQs and user questions.
//!
//! Candidates come from BM25 retrieval; a [`PairScorer`] then re-scores
//! every (FAQ, user question) pair of the pool and the best few survive.
//! Two scorers ship with the crate: [`ClassifierScorer`], a logistic
//! regression over lexical overlap features, and [`HttpPairScorer`], which
//! forwards pairs to an external model service.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Question};
use crate::jsonl::{self, ArtifactHeader};
use crate::logistic::{self, LogisticModel, TrainConfig, TrainingMeta};
use crate::service::{ServiceClient, ServiceConfig};
use crate::textindex::{Bm25Params, InvertedIndex};
use crate::{Error, Result};

pub const DEFAULT_POOL_SIZE: usize = 1000;
pub const DEFAULT_TOP: usize = 3;

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "to", "of", "in", "on", "for", "and", "or", "is", "are", "am", "do", "does",
    "did", "i", "you", "your", "my", "me", "we", "it", "be", "can", "with", "at", "by", "from",
    "this", "that", "if", "as", "was", "have", "has", "there", "their", "they",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFeatures {
    pub unigram_jaccard: f64,
    pub bigram_jaccard: f64,
    pub bm25_score: f64,
    pub length_ratio: f64,
    pub first_token_match: f64,
    pub content_overlap_count: u32,
}

impl PairFeatures {
    pub const DIM: usize = 6;

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.unigram_jaccard,
            self.bigram_jaccard,
            self.bm25_score,
            self.length_ratio,
            self.first_token_match,
            self.content_overlap_count as f64,
        ]
    }
}

fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn bigrams(tokens: &[String]) -> BTreeSet<(&str, &str)> {
    tokens
        .windows(2)
        .map(|w| (w[0].as_str(), w[1].as_str()))
        .collect()
}

fn is_content_token(t: &str) -> bool {
    t.chars().any(char::is_alphanumeric) && !FUNCTION_WORDS.contains(&t)
}

/// Lexical features of one (FAQ, user question) pair. The BM25 feature is
/// the user question's score for the FAQ as query, or 0 when the user
/// question is not in the index.
pub fn extract_features(
    faq: &Question,
    uq: &Question,
    index: &InvertedIndex,
    params: &Bm25Params,
) -> PairFeatures {
    let (ft, ut) = (faq.tokens(), uq.tokens());
    let fu: BTreeSet<&str> = ft.iter().map(String::as_str).collect();
    let uu: BTreeSet<&str> = ut.iter().map(String::as_str).collect();
    let bm25_score = index.bm25_score(params, ft, uq.id()).unwrap_or(0.0);
    let (lf, lu) = (ft.len().max(1) as f64, ut.len().max(1) as f64);
    PairFeatures {
        unigram_jaccard: jaccard(&fu, &uu),
        bigram_jaccard: jaccard(&bigrams(ft), &bigrams(ut)),
        bm25_score,
        length_ratio: lf.min(lu) / lf.max(lu),
        first_token_match: match (ft.first(), ut.first()) {
            (Some(a), Some(b)) if a == b => 1.0,
            _ => 0.0,
        },
        content_overlap_count: fu
            .intersection(&uu)
            .filter(|t| is_content_token(t))
            .count() as u32,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Match,
    NoMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairLabel {
    pub faq_id: String,
    pub user_q_id: String,
    pub label: Label,
}

/// Reads a labels file, rejecting repeated (faq_id, user_q_id) pairs.
pub fn load_labels(path: &Path) -> Result<Vec<PairLabel>> {
    let labels: Vec<PairLabel> = jsonl::read_records(path)?;
    let mut seen = HashSet::new();
    for l in &labels {
        if !seen.insert((l.faq_id.as_str(), l.user_q_id.as_str())) {
            return Err(Error::InvalidInput(format!(
                "duplicate label for pair ({}, {})",
                l.faq_id, l.user_q_id
            )));
        }
    }
    Ok(labels)
}

pub fn save_labels(path: &Path, labels: &[PairLabel], header: Option<&ArtifactHeader>) -> Result<()> {
    jsonl::write_records(path, header, labels)
}

/// Resolves label ids to questions and computes their features.
pub struct PairContext<'a> {
    pub faqs: &'a Corpus,
    /// Searched in order; later corpora hold questions outside the index,
    /// such as annotator rewrites.
    pub users: Vec<&'a Corpus>,
    pub index: &'a InvertedIndex,
    pub params: Bm25Params,
}

impl PairContext<'_> {
    pub fn user_question(&self, id: &str) -> Option<&Question> {
        self.users.iter().find_map(|c| c.get(id))
    }

    pub fn features(&self, faq_id: &str, user_q_id: &str) -> Result<PairFeatures> {
        let faq = self
            .faqs
            .get(faq_id)
            .ok_or_else(|| Error::UnknownDocument(faq_id.to_string()))?;
        let uq = self
            .user_question(user_q_id)
            .ok_or_else(|| Error::UnknownDocument(user_q_id.to_string()))?;
        Ok(extract_features(faq, uq, self.index, &self.params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClassifier {
    pub model: LogisticModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingMeta>,
}

impl PairClassifier {
    /// Classifier with all feature weights zero; every pair scores
    /// `sigmoid(bias)`.
    pub fn constant(bias: f64) -> Self {
        PairClassifier {
            model: LogisticModel::from_weights(vec![0.0; PairFeatures::DIM], bias),
            training: None,
        }
    }

    pub fn score_features(&self, f: &PairFeatures) -> f64 {
        self.model.predict(&f.to_vec())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::io(path, e.into()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let clf: PairClassifier = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if clf.model.dim() != PairFeatures::DIM {
            return Err(Error::InvalidInput(format!(
                "classifier has {} weights, expected {}",
                clf.model.dim(),
                PairFeatures::DIM
            )));
        }
        Ok(clf)
    }
}

/// Trains a pair classifier by logistic regression on the labeled pairs.
pub fn train_classifier<F>(
    labels: &[PairLabel],
    mut feature_lookup: F,
    config: &TrainConfig,
) -> Result<PairClassifier>
where
    F: FnMut(&PairLabel) -> Result<PairFeatures>,
{
    let matches = labels.iter().filter(|l| l.label == Label::Match).count();
    if matches == 0 || matches == labels.len() {
        return Err(Error::DegenerateTraining(format!(
            "labels contain {matches} matches and {} non-matches; both classes are required",
            labels.len() - matches
        )));
    }
    let mut inputs = Vec::with_capacity(labels.len());
    for l in labels {
        inputs.push(feature_lookup(l)?.to_vec());
    }
    let targets: Vec<bool> = labels.iter().map(|l| l.label == Label::Match).collect();
    let (model, meta) = logistic::fit(&inputs, &targets, config)?;
    Ok(PairClassifier {
        model,
        training: Some(meta),
    })
}

/// Anything that can score (FAQ, user question) pairs.
pub trait PairScorer: Sync {
    /// One score per candidate, in candidate order.
    fn score_pairs(&self, faq: &Question, candidates: &[&Question]) -> Result<Vec<f64>>;
}

pub fn score_pair(scorer: &dyn PairScorer, faq: &Question, uq: &Question) -> Result<f64> {
    let scores = scorer.score_pairs(faq, &[uq])?;
    scores
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("scorer returned no score".into()))
}

pub struct ClassifierScorer<'a> {
    pub classifier: &'a PairClassifier,
    pub index: &'a InvertedIndex,
    pub params: Bm25Params,
}

impl PairScorer for ClassifierScorer<'_> {
    fn score_pairs(&self, faq: &Question, candidates: &[&Question]) -> Result<Vec<f64>> {
        Ok(candidates
            .iter()
            .map(|uq| {
                self.classifier
                    .score_features(&extract_features(faq, uq, self.index, &self.params))
            })
            .collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pairs: Vec<ScorePairWire>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScorePairWire {
    pub faq: String,
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

/// Client for `POST /score`. Large candidate lists are sent in chunks of
/// `batch_size`, at most `max_in_flight` at a time.
pub struct HttpPairScorer {
    client: ServiceClient,
    batch_size: usize,
}

impl HttpPairScorer {
    pub fn new(config: ServiceConfig) -> Self {
        HttpPairScorer {
            client: ServiceClient::new(config),
            batch_size: 64,
        }
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    fn score_chunk(&self, faq: &Question, chunk: &[&Question]) -> Result<Vec<f64>> {
        let request = ScoreRequest {
            pairs: chunk
                .iter()
                .map(|uq| ScorePairWire {
                    faq: faq.text().to_string(),
                    question: uq.text().to_string(),
                })
                .collect(),
        };
        let reply: ScoreResponse = self.client.post_json("/score", &request)?;
        let endpoint = || self.client.endpoint("/score");
        if reply.scores.len() != chunk.len() {
            return Err(Error::Service {
                endpoint: endpoint(),
                message: format!(
                    "malformed reply: {} scores for {} pairs",
                    reply.scores.len(),
                    chunk.len()
                ),
            });
        }
        if let Some(bad) = reply.scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::Service {
                endpoint: endpoint(),
                message: format!("malformed reply: non-finite score {bad}"),
            });
        }
        Ok(reply.scores)
    }
}

impl PairScorer for HttpPairScorer {
    fn score_pairs(&self, faq: &Question, candidates: &[&Question]) -> Result<Vec<f64>> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[&Question]> = candidates.chunks(self.batch_size).collect();
        let in_flight = self.client.config().max_in_flight.max(1);
        let mut out = Vec::with_capacity(candidates.len());
        for wave in chunks.chunks(in_flight) {
            let results: Vec<Result<Vec<f64>>> = std::thread::scope(|s| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| s.spawn(move || self.score_chunk(faq, chunk)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scoring thread panicked"))
                    .collect()
            });
            for r in results {
                out.extend(r?);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reranked {
    /// BM25 pool, best first.
    pub pool: Vec<(String, f64)>,
    /// Surviving candidates with their re-ranking scores, best first.
    pub top: Vec<(String, f64)>,
}

/// Sorts by score descending, ties by ascending id.
pub fn sort_by_score(items: &mut [(String, f64)]) {
    items.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
}

/// Retrieves up to `pool_size` user questions with BM25, re-scores them
/// all and keeps the best `top`.
pub fn rerank(
    faq: &Question,
    users: &Corpus,
    index: &InvertedIndex,
    params: &Bm25Params,
    scorer: &dyn PairScorer,
    pool_size: usize,
    top: usize,
) -> Result<Reranked> {
    let pool = index.retrieve_top_k(params, faq.tokens(), pool_size);
    if pool.is_empty() {
        return Ok(Reranked {
            pool,
            top: Vec::new(),
        });
    }
    let candidates = pool
        .iter()
        .map(|(id, _)| {
            users
                .get(id)
                .ok_or_else(|| Error::UnknownDocument(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = scorer.score_pairs(faq, &candidates)?;
    let mut rescored: Vec<(String, f64)> = pool
        .iter()
        .zip(scores)
        .map(|((id, _), s)| (id.clone(), s))
        .collect();
    sort_by_score(&mut rescored);
    rescored.truncate(top);
    Ok(Reranked { pool, top: rescored })
}

/// [`rerank`] with the standard three survivors.
pub fn rerank_top3(
    faq: &Question,
    users: &Corpus,
    index: &InvertedIndex,
    params: &Bm25Params,
    scorer: &dyn PairScorer,
    pool_size: usize,
) -> Result<Vec<String>> {
    Ok(rerank(faq, users, index, params, scorer, pool_size, DEFAULT_TOP)?
        .top
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}
