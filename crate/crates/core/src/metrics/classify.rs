//! Percent-of-corpus metrics driven by pluggable scorers (question type,
//! formality) and mean grammar-error counts driven by a pluggable counter.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Question};
use crate::jsonl;
use crate::logistic::{self, LogisticModel, TrainConfig, TrainingMeta};
use crate::{Error, Result};

/// Real-valued score per question, e.g. a formality level or the
/// probability that a question is an organizational FAQ.
pub trait QuestionScorer {
    fn score(&self, question: &Question) -> std::result::Result<f64, String>;
}

impl<F> QuestionScorer for F
where
    F: Fn(&Question) -> std::result::Result<f64, String>,
{
    fn score(&self, question: &Question) -> std::result::Result<f64, String> {
        self(question)
    }
}

/// Decides whether a score counts towards the percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// score > 3.75
    Formal,
    /// score < 3.25
    Informal,
    /// 3.25 <= score <= 3.75
    Neutral,
    /// score > 0.5
    BinaryPositive,
    Above(f64),
    Below(f64),
}

pub const FORMAL_ABOVE: f64 = 3.75;
pub const INFORMAL_BELOW: f64 = 3.25;

impl ThresholdRule {
    pub fn holds(&self, score: f64) -> bool {
        match *self {
            ThresholdRule::Formal => score > FORMAL_ABOVE,
            ThresholdRule::Informal => score < INFORMAL_BELOW,
            ThresholdRule::Neutral => (INFORMAL_BELOW..=FORMAL_ABOVE).contains(&score),
            ThresholdRule::BinaryPositive => score > 0.5,
            ThresholdRule::Above(t) => score > t,
            ThresholdRule::Below(t) => score < t,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "formal" => Some(ThresholdRule::Formal),
            "informal" => Some(ThresholdRule::Informal),
            "neutral" => Some(ThresholdRule::Neutral),
            "binary" | "binary_positive" => Some(ThresholdRule::BinaryPositive),
            _ => None,
        }
    }
}

/// `100 · |{q : rule(score(q))}| / |corpus|`. The first scorer failure or
/// non-finite score aborts with that question's id.
pub fn classify_percent(
    corpus: &Corpus,
    scorer: &dyn QuestionScorer,
    rule: ThresholdRule,
) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot classify an empty corpus".into()));
    }
    let mut hits = 0usize;
    for q in corpus.iter() {
        let s = scorer.score(q).map_err(|message| Error::ScorerFailed {
            id: q.id().to_string(),
            message,
        })?;
        if !s.is_finite() {
            return Err(Error::ScorerFailed {
                id: q.id().to_string(),
                message: format!("non-finite score {s}"),
            });
        }
        if rule.holds(s) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / corpus.len() as f64)
}

/// Precomputed scores keyed by question id, e.g. the output of an
/// external formality model.
#[derive(Debug, Clone, Default)]
pub struct LookupScorer {
    scores: HashMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRecord {
    id: String,
    score: f64,
}

impl LookupScorer {
    pub fn new(scores: HashMap<String, f64>) -> Self {
        LookupScorer { scores }
    }

    /// Reads `{"id": ..., "score": ...}` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let recs: Vec<ScoreRecord> = jsonl::read_records(path)?;
        Ok(LookupScorer {
            scores: recs.into_iter().map(|r| (r.id, r.score)).collect(),
        })
    }
}

impl QuestionScorer for LookupScorer {
    fn score(&self, q: &Question) -> std::result::Result<f64, String> {
        self.scores
            .get(q.id())
            .copied()
            .ok_or_else(|| "no score for this id".to_string())
    }
}

/// Labeled text used to train a [`TokenClassifier`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub label: bool,
}

/// Bag-of-words logistic regression over the most frequent training tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenClassifier {
    pub vocabulary: Vec<String>,
    pub model: LogisticModel,
    pub training: TrainingMeta,
}

impl TokenClassifier {
    pub fn train(examples: &[LabeledText], max_vocab: usize, config: &TrainConfig) -> Result<Self> {
        let tokenized: Vec<Vec<String>> = examples
            .iter()
            .map(|e| crate::corpus::tokenize(&e.text))
            .collect();
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for toks in &tokenized {
            for t in toks {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let vocabulary: Vec<String> = ranked
            .into_iter()
            .take(max_vocab.max(1))
            .map(|(t, _)| t.to_string())
            .collect();
        let positions: HashMap<&str, usize> = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let inputs: Vec<Vec<f64>> = tokenized
            .iter()
            .map(|toks| presence(toks, &positions, vocabulary.len()))
            .collect();
        let targets: Vec<bool> = examples.iter().map(|e| e.label).collect();
        let (model, training) = logistic::fit(&inputs, &targets, config)?;
        Ok(TokenClassifier {
            vocabulary,
            model,
            training,
        })
    }

    pub fn probability(&self, tokens: &[String]) -> f64 {
        let positions: HashMap<&str, usize> = self
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        self.model
            .predict(&presence(tokens, &positions, self.vocabulary.len()))
    }
}

fn presence(tokens: &[String], positions: &HashMap<&str, usize>, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for t in tokens {
        if let Some(&i) = positions.get(t.as_str()) {
            x[i] = 1.0;
        }
    }
    x
}

impl QuestionScorer for TokenClassifier {
    fn score(&self, q: &Question) -> std::result::Result<f64, String> {
        Ok(self.probability(q.tokens()))
    }
}

/// Counts grammatical errors in a text.
pub trait GrammarErrorCounter {
    fn count_errors(&self, text: &str) -> std::result::Result<u32, String>;
}

/// Reports zero errors for every text.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullGrammarCounter;

impl GrammarErrorCounter for NullGrammarCounter {
    fn count_errors(&self, _text: &str) -> std::result::Result<u32, String> {
        Ok(0)
    }
}

pub fn mean_grammar_errors(corpus: &Corpus, counter: &dyn GrammarErrorCounter) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot count errors in an empty corpus".into()));
    }
    let mut total = 0u64;
    for q in corpus.iter() {
        total += counter
            .count_errors(q.text())
            .map_err(|message| Error::ScorerFailed {
                id: q.id().to_string(),
                message,
            })? as u64;
    }
    Ok(total as f64 / corpus.len() as f64)
}
