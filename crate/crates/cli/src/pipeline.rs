//! Corpus preparation, retrieval, ranker training, re-ranking and topic
//! construction.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use faqkit_annotate::RewriteRecord;
use faqkit_core::corpus::{self, Corpus, CorpusRecord, Question, QuestionKind};
use faqkit_core::genpipe::TopicRecord;
use faqkit_core::jsonl;
use faqkit_core::logistic::TrainConfig;
use faqkit_core::ranker::{
    self, ClassifierScorer, HttpPairScorer, Label, PairClassifier, PairContext, PairLabel, PairScorer,
};
use faqkit_core::textindex::InvertedIndex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    BuildDatasetArgs, IndexArgs, IngestArgs, InputFormat, MaskArgs, RerankArgs, RetrieveArgs, TrainRankerArgs,
    UsersOpts,
};
use crate::error::{CliError, Result};
use crate::output::{par_map, summary, Ctx};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub id: String,
    pub score: f64,
}

/// Per-FAQ candidate list written by `retrieve` and `rerank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateList {
    pub faq_id: String,
    /// BM25 pool size the candidates were chosen from (`rerank` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    pub candidates: Vec<Scored>,
}

fn scored(items: Vec<(String, f64)>) -> Vec<Scored> {
    items.into_iter().map(|(id, score)| Scored { id, score }).collect()
}

pub fn load_users(opts: &UsersOpts) -> Result<(Corpus, InvertedIndex)> {
    let users = corpus::load_corpus(&opts.users, QuestionKind::UserQuestion)?;
    let index = match &opts.index {
        Some(p) => {
            let index = InvertedIndex::load(p)?;
            if let Some(missing) = index.doc_ids().iter().find(|id| users.get(id).is_none()) {
                return Err(CliError::Invalid(format!(
                    "index {} holds {missing:?}, which is not in {}",
                    p.display(),
                    opts.users.display()
                )));
            }
            index
        }
        None => InvertedIndex::build(&users),
    };
    Ok((users, index))
}

fn load_faqs(path: &Path) -> Result<Corpus> {
    Ok(corpus::load_corpus(path, QuestionKind::OrgFaq)?)
}

pub fn ingest(ctx: &Ctx, a: IngestArgs) -> Result<()> {
    let mut records: Vec<CorpusRecord> = match a.format {
        InputFormat::Jsonl => jsonl::read_records(&a.input)?,
        InputFormat::Text => std::fs::read_to_string(&a.input)
            .map_err(|e| CliError::io(&a.input, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|text| CorpusRecord {
                id: None,
                text: text.to_string(),
                source: None,
                answer: None,
            })
            .collect(),
    };
    if let Some(prefix) = &a.id_prefix {
        for (i, r) in records.iter_mut().enumerate() {
            r.id.get_or_insert_with(|| format!("{prefix}{}", i + 1));
        }
    }
    let corpus = corpus::corpus_from_records(records, a.kind.into())?;
    let corpus = corpus::mask_org_names(corpus, &a.alias)?;
    corpus::save_corpus(&a.output, &corpus, Some(&ctx.header()))?;
    summary(json!({ "questions": corpus.len(), "masked": corpus.masks_applied() }));
    Ok(())
}

pub fn mask(ctx: &Ctx, a: MaskArgs) -> Result<()> {
    let mut aliases = a.alias.clone();
    if let Some(p) = &a.aliases_file {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        aliases.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from),
        );
    }
    if aliases.is_empty() {
        return Err(CliError::Usage("mask needs at least one --alias or --aliases-file entry".into()));
    }
    let corpus = corpus::load_corpus(&a.input, a.kind.into())?;
    let before: Vec<String> = corpus.iter().map(|q| q.text().to_string()).collect();
    let masked = corpus::mask_org_names(corpus, &aliases)?;
    let changed = masked.iter().zip(&before).filter(|(q, t)| q.text() != t.as_str()).count();
    corpus::save_corpus(&a.output, &masked, Some(&ctx.header()))?;
    summary(json!({ "questions": masked.len(), "changed": changed }));
    Ok(())
}

pub fn index(_ctx: &Ctx, a: IndexArgs) -> Result<()> {
    let users = corpus::load_corpus(&a.input, QuestionKind::UserQuestion)?;
    let index = InvertedIndex::build(&users);
    index.save(&a.output)?;
    summary(json!({
        "documents": index.doc_count(),
        "terms": index.terms().count(),
        "avg_doc_length": index.avg_doc_length(),
    }));
    Ok(())
}

pub fn retrieve(ctx: &Ctx, a: RetrieveArgs) -> Result<()> {
    let faqs = load_faqs(&a.faqs)?;
    let (_, index) = load_users(&a.users)?;
    let params = a.bm25.params()?;
    let lists = par_map(faqs.questions(), ctx.jobs, |faq| {
        Ok(CandidateList {
            faq_id: faq.id().to_string(),
            pool_size: None,
            candidates: scored(index.retrieve_top_k(&params, faq.tokens(), a.k)),
        })
    })?;
    jsonl::write_records(&a.output, Some(&ctx.header()), &lists)?;
    let total: usize = lists.iter().map(|l| l.candidates.len()).sum();
    summary(json!({ "faqs": lists.len(), "candidates": total }));
    Ok(())
}

pub fn train_ranker(ctx: &Ctx, a: TrainRankerArgs) -> Result<()> {
    let faqs = load_faqs(&a.faqs)?;
    let (users, index) = load_users(&a.users)?;
    let params = a.bm25.params()?;
    let mut labels = ranker::load_labels(&a.labels)?;

    // rewrites are not in the index; they join as a second user corpus
    let rewrites: Vec<RewriteRecord> = match &a.rewrites {
        Some(p) => jsonl::read_records(p)?,
        None => Vec::new(),
    };
    let extra = Corpus::new(
        rewrites
            .iter()
            .map(|r| Question::new(r.user_q_id.clone(), r.text.clone(), QuestionKind::UserQuestion))
            .collect(),
    )?;
    let known: HashSet<(String, String)> = labels
        .iter()
        .map(|l| (l.faq_id.clone(), l.user_q_id.clone()))
        .collect();
    for r in &rewrites {
        if !known.contains(&(r.faq_id.clone(), r.user_q_id.clone())) {
            labels.push(PairLabel {
                faq_id: r.faq_id.clone(),
                user_q_id: r.user_q_id.clone(),
                label: r.label,
            });
        }
    }

    let pairs = PairContext {
        faqs: &faqs,
        users: vec![&users, &extra],
        index: &index,
        params,
    };
    let config = TrainConfig {
        learning_rate: a.learning_rate,
        iterations: a.iterations,
        seed: ctx.seed,
    };
    let clf = ranker::train_classifier(&labels, |l| pairs.features(&l.faq_id, &l.user_q_id), &config)?;
    clf.save(&a.output)?;
    summary(json!({ "examples": labels.len(), "rewrites": rewrites.len(), "training": clf.training }));
    Ok(())
}

pub fn rerank(ctx: &Ctx, a: RerankArgs) -> Result<()> {
    let faqs = load_faqs(&a.faqs)?;
    let (users, index) = load_users(&a.users)?;
    let params = a.bm25.params()?;
    match (&a.model, a.service.config()) {
        (Some(p), _) => {
            let classifier = PairClassifier::load(p)?;
            let scorer = ClassifierScorer {
                classifier: &classifier,
                index: &index,
                params,
            };
            run_rerank(ctx, &a, &faqs, &users, &index, &scorer)
        }
        (None, Some(cfg)) => run_rerank(ctx, &a, &faqs, &users, &index, &HttpPairScorer::new(cfg)),
        (None, None) => Err(CliError::Usage("rerank needs --model or --service".into())),
    }
}

fn run_rerank(
    ctx: &Ctx,
    a: &RerankArgs,
    faqs: &Corpus,
    users: &Corpus,
    index: &InvertedIndex,
    scorer: &dyn PairScorer,
) -> Result<()> {
    let params = a.bm25.params()?;
    let lists = par_map(faqs.questions(), ctx.jobs, |faq| {
        let r = ranker::rerank(faq, users, index, &params, scorer, a.pool, a.top)?;
        Ok(CandidateList {
            faq_id: faq.id().to_string(),
            pool_size: Some(r.pool.len()),
            candidates: scored(r.top),
        })
    })?;
    jsonl::write_records(&a.output, Some(&ctx.header()), &lists)?;
    let kept: usize = lists.iter().map(|l| l.candidates.len()).sum();
    summary(json!({ "faqs": lists.len(), "kept": kept }));
    Ok(())
}

pub fn build_dataset(ctx: &Ctx, a: BuildDatasetArgs) -> Result<()> {
    let faqs = load_faqs(&a.faqs)?;
    let users = corpus::load_corpus(&a.users, QuestionKind::UserQuestion)?;
    let lists: Vec<CandidateList> = jsonl::read_records(&a.reranked)?;
    let labels = match &a.labels {
        Some(p) => ranker::load_labels(p)?,
        None => Vec::new(),
    };
    let mut verdicts: HashMap<&str, Vec<(&str, Label)>> = HashMap::new();
    for l in &labels {
        verdicts.entry(l.faq_id.as_str()).or_default().push((l.user_q_id.as_str(), l.label));
    }

    let mut topics = Vec::new();
    let mut dropped = 0usize;
    for list in &lists {
        let faq = faqs
            .get(&list.faq_id)
            .ok_or_else(|| CliError::Invalid(format!("unknown FAQ {:?} in {}", list.faq_id, a.reranked.display())))?;
        let judged = verdicts.get(list.faq_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let rejected: HashSet<&str> = judged
            .iter()
            .filter(|(_, l)| *l == Label::NoMatch)
            .map(|(id, _)| *id)
            .collect();
        let mut ids: Vec<&str> = list
            .candidates
            .iter()
            .map(|c| c.id.as_str())
            .filter(|id| !rejected.contains(id))
            .collect();
        for (id, label) in judged {
            if *label == Label::Match && !ids.contains(id) {
                ids.push(id);
            }
        }
        let texts = ids
            .iter()
            .map(|id| {
                users
                    .get(id)
                    .map(|q| q.text().to_string())
                    .ok_or_else(|| CliError::Invalid(format!("unknown user question {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if texts.is_empty() || texts.len() < a.min_questions {
            dropped += 1;
            continue;
        }
        topics.push(TopicRecord {
            name: list.faq_id.clone(),
            user_questions: texts,
            faqs: vec![faq.text().to_string()],
        });
    }
    faqkit_core::genpipe::save_topics(&a.output, &topics, Some(&ctx.header()))?;
    summary(json!({ "topics": topics.len(), "dropped": dropped }));
    Ok(())
}
