//! Question collections: tokenization, organization-name masking and the
//! line-delimited corpus file format.

use std::collections::HashMap;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::jsonl::{self, ArtifactHeader};
use crate::{Error, Result};

/// Replacement literal for masked organization names.
pub const ORG_NAME: &str = "ORG_NAME";

const PUNCTUATION: &[char] = &['.', ',', '?', '!', '\'', '"', ':', ';', '(', ')'];

/// Splits text into lowercase tokens.
///
/// Whitespace separates tokens and the characters `. , ? ! ' " : ; ( )`
/// become standalone tokens, except an apostrophe with alphanumeric
/// characters on both sides, which stays inside its word (`i'd`).
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    for chunk in lower.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut word = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if !PUNCTUATION.contains(&c) {
                word.push(c);
                continue;
            }
            if c == '\'' && i > 0 && i + 1 < chars.len() {
                let (prev, next) = (chars[i - 1], chars[i + 1]);
                if prev.is_alphanumeric() && next.is_alphanumeric() && !word.is_empty() {
                    word.push(c);
                    continue;
                }
            }
            if !word.is_empty() {
                tokens.push(std::mem::take(&mut word));
            }
            tokens.push(c.to_string());
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

/// Joins tokens back into a single space-separated string.
pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    UserQuestion,
    OrgFaq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    id: String,
    text: String,
    tokens: Vec<String>,
    kind: QuestionKind,
    pub source: String,
    /// Carried through untouched; never tokenized or scored.
    pub answer: Option<String>,
}

impl Question {
    pub fn new(id: impl Into<String>, text: impl Into<String>, kind: QuestionKind) -> Self {
        let text = text.into();
        Question {
            id: id.into(),
            tokens: tokenize(&text),
            text,
            kind,
            source: String::new(),
            answer: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn with_answer(mut self, answer: impl Into<String>) -> Self {
        self.answer = Some(answer.into());
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn kind(&self) -> QuestionKind {
        self.kind
    }

    fn set_text(&mut self, text: String) {
        self.tokens = tokenize(&text);
        self.text = text;
    }
}

/// On-disk form of a question. The kind is supplied out of band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
}

impl From<&Question> for CorpusRecord {
    fn from(q: &Question) -> Self {
        CorpusRecord {
            id: Some(q.id.clone()),
            text: q.text.clone(),
            source: (!q.source.is_empty()).then(|| q.source.clone()),
            answer: q.answer.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    questions: Vec<Question>,
    by_id: HashMap<String, usize>,
    masks_applied: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(questions: Vec<Question>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if by_id.insert(q.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(q.id.clone()));
            }
        }
        Ok(Corpus {
            questions,
            by_id,
            masks_applied: Vec::new(),
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Question> {
        self.questions.iter()
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Question> {
        self.by_id.get(id).map(|&i| &self.questions[i])
    }

    pub fn masks_applied(&self) -> &[String] {
        &self.masks_applied
    }

    pub fn records(&self) -> impl Iterator<Item = CorpusRecord> + '_ {
        self.questions.iter().map(CorpusRecord::from)
    }
}

/// Loads a corpus file. Records without an `id` get their 1-based record
/// number as id.
pub fn load_corpus(path: &Path, kind: QuestionKind) -> Result<Corpus> {
    let records: Vec<CorpusRecord> = jsonl::read_records(path)?;
    corpus_from_records(records, kind)
}

pub fn corpus_from_records(records: Vec<CorpusRecord>, kind: QuestionKind) -> Result<Corpus> {
    let questions = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let id = r.id.unwrap_or_else(|| (i + 1).to_string());
            let mut q = Question::new(id, r.text, kind);
            q.source = r.source.unwrap_or_default();
            q.answer = r.answer;
            q
        })
        .collect();
    Corpus::new(questions)
}

pub fn save_corpus(path: &Path, corpus: &Corpus, header: Option<&ArtifactHeader>) -> Result<()> {
    jsonl::write_records(path, header, corpus.records())
}

/// Replaces every case-insensitive whole-word occurrence of each alias with
/// [`ORG_NAME`] in question texts and answers, then re-tokenizes.
///
/// A whole-word occurrence is one not preceded or followed by an
/// alphanumeric character or underscore. Longer aliases win over shorter
/// ones that start at the same position.
pub fn mask_org_names(mut corpus: Corpus, aliases: &[String]) -> Result<Corpus> {
    let masker = AliasMasker::new(aliases)?;
    let Some(masker) = masker else {
        return Ok(corpus);
    };
    for q in &mut corpus.questions {
        let masked = masker.apply(&q.text);
        if masked != q.text {
            q.set_text(masked);
        }
        if let Some(answer) = q.answer.as_mut() {
            *answer = masker.apply(answer);
        }
    }
    for alias in aliases {
        if !corpus
            .masks_applied
            .iter()
            .any(|m| m.to_lowercase() == alias.to_lowercase())
        {
            corpus.masks_applied.push(alias.clone());
        }
    }
    Ok(corpus)
}

struct AliasMasker {
    pattern: Regex,
}

impl AliasMasker {
    fn new(aliases: &[String]) -> Result<Option<Self>> {
        for alias in aliases {
            if alias.trim().is_empty() || alias.trim().eq_ignore_ascii_case(ORG_NAME) {
                return Err(Error::InvalidAlias(alias.clone()));
            }
        }
        if aliases.is_empty() {
            return Ok(None);
        }
        let mut sorted: Vec<&str> = aliases.iter().map(|a| a.trim()).collect();
        sorted.sort_by(|a, b| b.chars().count().cmp(&a.chars().count()).then(a.cmp(b)));
        sorted.dedup();
        let alternation = sorted
            .iter()
            .map(|a| regex::escape(a))
            .collect::<Vec<_>>()
            .join("|");
        let pattern = RegexBuilder::new(&alternation)
            .case_insensitive(true)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Some(AliasMasker { pattern }))
    }

    fn apply(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        let mut copied = 0;
        let mut pos = 0;
        while pos <= text.len() {
            let Some(m) = self.pattern.find_at(text, pos) else {
                break;
            };
            if is_boundary_before(text, m.start()) && is_boundary_after(text, m.end()) {
                out.push_str(&text[copied..m.start()]);
                out.push_str(ORG_NAME);
                copied = m.end();
                pos = m.end();
            } else {
                // retry one character further on so overlapping candidates are seen
                pos = m.start()
                    + text[m.start()..]
                        .chars()
                        .next()
                        .map(char::len_utf8)
                        .unwrap_or(1);
            }
        }
        out.push_str(&text[copied..]);
        out
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_boundary_before(text: &str, idx: usize) -> bool {
    text[..idx].chars().next_back().is_none_or(|c| !is_word_char(c))
}

fn is_boundary_after(text: &str, idx: usize) -> bool {
    text[idx..].chars().next().is_none_or(|c| !is_word_char(c))
}
