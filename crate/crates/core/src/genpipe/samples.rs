use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::corpus::{join_tokens, tokenize, Question, QuestionKind};
use crate::jsonl::{self, ArtifactHeader};
use crate::{Error, Result};

/// Separator token placed between concatenated input questions.
pub const Q_SEP: &str = "<Q_SEP>";

pub const MAX_INPUTS: usize = 10;

/// A cluster of user questions with the FAQs that answer them.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub name: String,
    pub user_questions: Vec<Question>,
    pub faqs: Vec<Question>,
}

impl Topic {
    pub fn new(name: impl Into<String>, user_questions: Vec<Question>, faqs: Vec<Question>) -> Result<Self> {
        let name = name.into();
        if user_questions.is_empty() || faqs.is_empty() {
            return Err(Error::InvalidInput(format!(
                "topic {name:?} needs at least one user question and one FAQ"
            )));
        }
        Ok(Topic {
            name,
            user_questions,
            faqs,
        })
    }

    /// Builds a topic from raw texts; question ids are `<name>/u<i>` and
    /// `<name>/f<i>`.
    pub fn from_texts<S: AsRef<str>>(name: &str, user_questions: &[S], faqs: &[S]) -> Result<Self> {
        let uqs = user_questions
            .iter()
            .enumerate()
            .map(|(i, t)| Question::new(format!("{name}/u{i}"), t.as_ref(), QuestionKind::UserQuestion))
            .collect();
        let fqs = faqs
            .iter()
            .enumerate()
            .map(|(i, t)| Question::new(format!("{name}/f{i}"), t.as_ref(), QuestionKind::OrgFaq))
            .collect();
        Topic::new(name, uqs, fqs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub name: String,
    pub user_questions: Vec<String>,
    pub faqs: Vec<String>,
}

pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let records: Vec<TopicRecord> = jsonl::read_records(path)?;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Topic::from_texts(&r.name, &r.user_questions, &r.faqs).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn save_topics(path: &Path, topics: &[TopicRecord], header: Option<&ArtifactHeader>) -> Result<()> {
    jsonl::write_records(path, header, topics)
}

/// One generation record: up to ten input questions and a target FAQ.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSample {
    pub inputs: Vec<Vec<String>>,
    pub input_ids: Vec<String>,
    pub target: Vec<String>,
    pub references: Vec<Vec<String>>,
    pub topic: Option<String>,
    /// Stable identity used to derive per-sample randomness.
    pub key: u64,
}

impl GenSample {
    /// Inputs joined by [`Q_SEP`].
    pub fn input_sequence(&self) -> Vec<String> {
        let mut seq = Vec::new();
        for (i, input) in self.inputs.iter().enumerate() {
            if i > 0 {
                seq.push(Q_SEP.to_string());
            }
            seq.extend(input.iter().cloned());
        }
        seq
    }

    pub fn input_text(&self) -> String {
        join_tokens(&self.input_sequence())
    }

    pub fn to_record(&self) -> SampleRecord {
        SampleRecord {
            inputs: self.inputs.iter().map(|t| join_tokens(t)).collect(),
            target: join_tokens(&self.target),
            references: self.references.iter().map(|t| join_tokens(t)).collect(),
            topic: self.topic.clone(),
        }
    }

    fn from_record(r: SampleRecord, key: u64) -> Result<Self> {
        if r.inputs.is_empty() || r.inputs.len() > MAX_INPUTS {
            return Err(Error::InvalidInput(format!(
                "a sample needs 1 to {MAX_INPUTS} inputs, got {}",
                r.inputs.len()
            )));
        }
        let target = tokenize(&r.target);
        let mut references: Vec<Vec<String>> = r.references.iter().map(|t| tokenize(t)).collect();
        if references.is_empty() {
            references.push(target.clone());
        } else if !references.contains(&target) {
            return Err(Error::InvalidInput(
                "sample target must be one of its references".into(),
            ));
        }
        if references.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput("sample references must be non-empty".into()));
        }
        Ok(GenSample {
            input_ids: (0..r.inputs.len()).map(|i| format!("s{key}/u{i}")).collect(),
            inputs: r.inputs.iter().map(|t| tokenize(t)).collect(),
            target,
            references,
            topic: r.topic,
            key,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub inputs: Vec<String>,
    pub target: String,
    #[serde(default)]
    pub references: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

/// Loads a sample file; each sample's key is its record index.
pub fn load_samples(path: &Path) -> Result<Vec<GenSample>> {
    let records: Vec<SampleRecord> = jsonl::read_records(path)?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            GenSample::from_record(r, i as u64).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn save_samples(path: &Path, samples: &[GenSample], header: Option<&ArtifactHeader>) -> Result<()> {
    jsonl::write_records(path, header, samples.iter().map(GenSample::to_record))
}

fn sample_key(topic_index: usize, faq_index: usize) -> u64 {
    ((topic_index as u64) << 32) | faq_index as u64
}

/// Expands topics into samples: one per FAQ, each with `min(n, 10)` input
/// questions and every FAQ of the topic as reference. When a topic has
/// more than ten user questions, each sample draws its own ten uniformly
/// without replacement.
pub fn build_samples(topics: &[Topic], seed: u64) -> Vec<GenSample> {
    let mut out = Vec::with_capacity(topics.iter().map(|t| t.faqs.len()).sum());
    for (ti, topic) in topics.iter().enumerate() {
        let references: Vec<Vec<String>> = topic.faqs.iter().map(|f| f.tokens().to_vec()).collect();
        let n = topic.user_questions.len();
        for (fi, faq) in topic.faqs.iter().enumerate() {
            let key = sample_key(ti, fi);
            let chosen: Vec<usize> = if n <= MAX_INPUTS {
                (0..n).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, key));
                let mut idx = rand::seq::index::sample(&mut rng, n, MAX_INPUTS).into_vec();
                idx.sort_unstable();
                idx
            };
            out.push(GenSample {
                inputs: chosen
                    .iter()
                    .map(|&i| topic.user_questions[i].tokens().to_vec())
                    .collect(),
                input_ids: chosen
                    .iter()
                    .map(|&i| topic.user_questions[i].id().to_string())
                    .collect(),
                target: faq.tokens().to_vec(),
                references: references.clone(),
                topic: Some(topic.name.clone()),
                key,
            });
        }
    }
    out
}
