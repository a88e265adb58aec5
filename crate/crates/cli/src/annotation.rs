//! Annotation commands. All of them work on the event log directly, so a
//! batch can be created, judged from a script and exported without a
//! running server.

use std::path::Path;
use std::sync::Arc;

use faqkit_annotate::model::{Candidate, FaqRef};
use faqkit_annotate::{api, ExportPolicy, NewBatch, NewJudgment, NewTask, Store, SystemClock};
use faqkit_core::corpus::{self, QuestionKind};
use faqkit_core::jsonl;
use faqkit_core::metrics::{fleiss_kappa, AgreementInput};
use faqkit_core::ranker::{self, Label};
use serde::Deserialize;
use serde_json::json;

use crate::args::{AgreementArgs, CreateBatchArgs, ExportLabelsArgs, JudgeArgs, Policy, ProgressArgs, ServeArgs};
use crate::error::{CliError, Result};
use crate::output::{summary, Ctx};
use crate::pipeline::CandidateList;

/// Tasks hold at most this many candidates; longer lists are split.
const TASK_SIZE: usize = faqkit_annotate::model::MAX_CANDIDATES;

fn open(log: &Path) -> Result<Store> {
    Ok(Store::open(log, Arc::new(SystemClock))?)
}

pub fn serve(_ctx: &Ctx, a: ServeArgs) -> Result<()> {
    let store = Arc::new(open(&a.log)?.with_lease_secs(a.lease_secs));
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io("<runtime>", e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .map_err(|e| CliError::io(&a.addr, e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(&a.addr, e))?;
        summary(json!({ "listening": format!("http://{addr}") }));
        api::serve(listener, store, a.ui_dir).await.map_err(|e| CliError::io(&a.addr, e))
    })
}

pub fn create_batch(_ctx: &Ctx, a: CreateBatchArgs) -> Result<()> {
    let faqs = corpus::load_corpus(&a.faqs, QuestionKind::OrgFaq)?;
    let users = corpus::load_corpus(&a.users, QuestionKind::UserQuestion)?;
    let lists: Vec<CandidateList> = jsonl::read_records(&a.candidates)?;
    let mut tasks = Vec::new();
    for list in &lists {
        let faq = faqs
            .get(&list.faq_id)
            .ok_or_else(|| CliError::Invalid(format!("unknown FAQ {:?}", list.faq_id)))?;
        for chunk in list.candidates.chunks(TASK_SIZE) {
            let candidates = chunk
                .iter()
                .map(|c| {
                    let uq = users
                        .get(&c.id)
                        .ok_or_else(|| CliError::Invalid(format!("unknown user question {:?}", c.id)))?;
                    Ok(Candidate {
                        id: c.id.clone(),
                        text: uq.text().to_string(),
                        score: c.score,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            tasks.push(NewTask {
                faq: FaqRef {
                    id: faq.id().to_string(),
                    text: faq.text().to_string(),
                },
                candidates,
            });
        }
    }
    let store = open(&a.log)?;
    let batch = store.create_batch(NewBatch {
        tasks,
        raters: Some(a.raters),
    })?;
    summary(serde_json::to_value(&batch).map_err(|e| CliError::Invalid(e.to_string()))?);
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ScriptedJudgment {
    #[serde(default)]
    task_id: Option<String>,
    #[serde(default)]
    faq_id: Option<String>,
    candidate_id: String,
    annotator: String,
    label: Label,
    #[serde(default)]
    rewrite: Option<String>,
}

pub fn judge(_ctx: &Ctx, a: JudgeArgs) -> Result<()> {
    let script: Vec<ScriptedJudgment> = jsonl::read_records(&a.input)?;
    let store = open(&a.log)?;
    let (mut accepted, mut duplicates) = (0usize, 0usize);
    for (i, j) in script.into_iter().enumerate() {
        let at_line = |source: CliError| CliError::Record {
            path: a.input.clone(),
            line: i + 1,
            source: Box::new(source),
        };
        let task_id = match (j.task_id, &j.faq_id) {
            (Some(t), _) => t,
            (None, Some(faq_id)) => resolve_task(&store, a.batch.as_deref(), faq_id, &j.candidate_id, &j.annotator)
                .map_err(at_line)?,
            (None, None) => return Err(at_line(CliError::Invalid("record needs task_id or faq_id".into()))),
        };
        let ack = store
            .submit(NewJudgment {
                task_id,
                candidate_id: j.candidate_id,
                annotator: j.annotator,
                label: j.label,
                rewrite: j.rewrite,
            })
            .map_err(|e| at_line(e.into()))?;
        if ack.duplicate {
            duplicates += 1;
        } else {
            accepted += 1;
        }
    }
    summary(json!({ "accepted": accepted, "duplicates": duplicates }));
    Ok(())
}

/// The first task showing `candidate` for `faq_id` that the annotator has
/// not judged yet, falling back to one they have (a resubmission).
fn resolve_task(store: &Store, batch: Option<&str>, faq_id: &str, candidate: &str, annotator: &str) -> Result<String> {
    let state = store.snapshot();
    let matching: Vec<&str> = state
        .tasks
        .values()
        .filter(|t| batch.is_none_or(|b| t.batch_id == b))
        .filter(|t| t.faq.id == faq_id && t.candidates.iter().any(|c| c.id == candidate))
        .map(|t| t.task_id.as_str())
        .collect();
    let fresh = matching.iter().find(|task| {
        state
            .judgments
            .get(&(task.to_string(), candidate.to_string()))
            .is_none_or(|votes| !votes.contains_key(annotator))
    });
    fresh
        .or(matching.first())
        .map(|t| t.to_string())
        .ok_or_else(|| CliError::Invalid(format!("no task shows ({faq_id}, {candidate})")))
}

pub fn export_labels(ctx: &Ctx, a: ExportLabelsArgs) -> Result<()> {
    let store = open(&a.log)?;
    let policy = match a.policy {
        Policy::Majority => ExportPolicy::Majority,
        Policy::Unanimous => ExportPolicy::Unanimous,
    };
    let export = store.export(&a.batch, policy)?;
    let header = ctx.header();
    ranker::save_labels(&a.output, &export.labels, Some(&header))?;
    if let Some(p) = &a.rewrites {
        jsonl::write_records(p, Some(&header), &export.rewrites)?;
    }
    summary(json!({
        "labels": export.labels.len(),
        "rewrites": export.rewrites.len(),
        "complete_pairs": export.complete_pairs,
        "skipped_incomplete": export.skipped_incomplete,
    }));
    Ok(())
}

pub fn agreement(ctx: &Ctx, a: AgreementArgs) -> Result<()> {
    match (&a.log, &a.batch, &a.input) {
        (Some(log), Some(batch), _) => ctx.report(None, &open(log)?.agreement(batch)?),
        (None, _, Some(input)) => {
            let data = AgreementInput::load(input)?;
            let kappa = fleiss_kappa(&data)?;
            ctx.report(None, &json!({ "kappa": kappa, "items": data.items.len(), "raters": data.raters }))
        }
        _ => Err(CliError::Usage("agreement needs --log with --batch, or --input".into())),
    }
}

pub fn progress(ctx: &Ctx, a: ProgressArgs) -> Result<()> {
    ctx.report(None, &open(&a.log)?.progress(&a.batch)?)
}
