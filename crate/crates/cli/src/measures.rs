use std::collections::BTreeMap;

use faqkit_core::corpus::{self, tokenize, QuestionKind};
use faqkit_core::jsonl;
use faqkit_core::metrics::{self, classify_percent, corpus_stats, LookupScorer, RougeScore, ThresholdRule};
use serde::{Deserialize, Serialize};

use crate::args::{ReadabilityArgs, RougeArgs, StatsArgs};
use crate::error::{CliError, Result};
use crate::output::Ctx;

#[derive(Serialize)]
struct StatsReport {
    stats: metrics::CorpusStats,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    percent: BTreeMap<String, f64>,
}

pub fn stats(ctx: &Ctx, a: StatsArgs) -> Result<()> {
    let corpus = corpus::load_corpus(&a.input, QuestionKind::UserQuestion)?;
    let stats = corpus_stats(&corpus, a.threshold)?;
    let mut percent = BTreeMap::new();
    if let Some(p) = &a.scores {
        let scorer = LookupScorer::load(p)?;
        let rules = if a.rule.is_empty() { vec!["binary".to_string()] } else { a.rule.clone() };
        for name in rules {
            let rule = ThresholdRule::parse(&name)
                .ok_or_else(|| CliError::Usage(format!("unknown --rule {name:?}")))?;
            percent.insert(name, classify_percent(&corpus, &scorer, rule)?);
        }
    }
    ctx.report(a.output.as_deref(), &StatsReport { stats, percent })
}

#[derive(Serialize)]
struct ReadabilitySummary {
    mean_grade: f64,
    texts: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<metrics::ReadabilityReport>,
}

pub fn readability(ctx: &Ctx, a: ReadabilityArgs) -> Result<()> {
    let report = match (&a.text, &a.input) {
        (Some(text), _) => {
            let r = metrics::readability(text)?;
            ReadabilitySummary {
                mean_grade: r.grade,
                texts: 1,
                detail: Some(r),
            }
        }
        (None, Some(path)) => {
            let corpus = corpus::load_corpus(path, QuestionKind::UserQuestion)?;
            if corpus.is_empty() {
                return Err(CliError::Invalid(format!("{} has no questions", path.display())));
            }
            let mut sum = 0.0;
            for q in corpus.iter() {
                sum += metrics::flesch_kincaid_grade(q.text())?;
            }
            ReadabilitySummary {
                mean_grade: sum / corpus.len() as f64,
                texts: corpus.len(),
                detail: None,
            }
        }
        (None, None) => return Err(CliError::Usage("readability needs --text or --input".into())),
    };
    ctx.report(a.output.as_deref(), &report)
}

#[derive(Deserialize)]
struct RougePair {
    candidate: String,
    references: Vec<String>,
}

#[derive(Serialize)]
struct RougeReport {
    #[serde(flatten)]
    score: RougeScore,
    pairs: usize,
}

fn score_pair(candidate: &str, references: &[String]) -> Result<RougeScore> {
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
    Ok(metrics::rouge_all(&tokenize(candidate), &refs)?)
}

pub fn rouge(ctx: &Ctx, a: RougeArgs) -> Result<()> {
    let scores = match (&a.candidate, &a.input) {
        (Some(c), _) => vec![score_pair(c, &a.reference)?],
        (None, Some(path)) => {
            let pairs: Vec<RougePair> = jsonl::read_records(path)?;
            pairs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    score_pair(&p.candidate, &p.references).map_err(|e| CliError::Record {
                        path: path.clone(),
                        line: i + 1,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        (None, None) => return Err(CliError::Usage("rouge needs --candidate or --input".into())),
    };
    let score = RougeScore::mean(&scores).ok_or_else(|| CliError::Invalid("no pairs to score".into()))?;
    ctx.report(
        a.output.as_deref(),
        &RougeReport {
            score,
            pairs: scores.len(),
        },
    )
}
