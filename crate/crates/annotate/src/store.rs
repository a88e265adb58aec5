//! The annotation store: validates commands, appends events and answers
//! queries from the folded state. All writes go through one mutex.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use faqkit_core::metrics::{fleiss_kappa, AgreementInput, AgreementItem};
use faqkit_core::ranker::{Label, PairLabel};
use serde::{Deserialize, Serialize};

use crate::error::{AnnotateError, Result};
use crate::log::EventLog;
use crate::model::{Candidate, Event, FaqRef, State, Task, DEFAULT_RATERS, MAX_CANDIDATES};

pub const DEFAULT_LEASE_SECS: u64 = 900;

/// Seconds since the epoch.
pub trait Clock: Send + Sync {
    fn now(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: u64) -> Self {
        ManualClock(AtomicU64::new(start))
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewTask {
    pub faq: FaqRef,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewBatch {
    pub tasks: Vec<NewTask>,
    #[serde(default)]
    pub raters: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub batch_id: String,
    pub task_ids: Vec<String>,
    pub raters: u32,
    pub pairs: usize,
    pub required_judgments: usize,
}

/// Work handed to an annotator: the candidates they hold a lease on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub task_id: String,
    pub batch_id: String,
    pub faq: FaqRef,
    pub candidates: Vec<Candidate>,
    pub raters: u32,
    pub expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewJudgment {
    pub task_id: String,
    pub candidate_id: String,
    pub annotator: String,
    pub label: Label,
    #[serde(default)]
    pub rewrite: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub task_id: String,
    pub candidate_id: String,
    /// True when an identical judgment was already stored.
    pub duplicate: bool,
    pub judgments: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportPolicy {
    /// Match when more than half of the raters said match.
    #[default]
    Majority,
    /// Match only when every rater said match.
    Unanimous,
}

impl FromStr for ExportPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "majority" => Ok(ExportPolicy::Majority),
            "unanimous" => Ok(ExportPolicy::Unanimous),
            other => Err(format!("unknown policy {other:?} (expected majority or unanimous)")),
        }
    }
}

/// An annotator's rewrite of a non-matching user question, exported as a
/// new user question that matches the FAQ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewriteRecord {
    pub faq_id: String,
    pub user_q_id: String,
    pub text: String,
    pub rewritten_from: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Export {
    pub batch_id: String,
    pub policy: ExportPolicy,
    pub labels: Vec<PairLabel>,
    pub rewrites: Vec<RewriteRecord>,
    pub complete_pairs: usize,
    pub skipped_incomplete: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub batch_id: String,
    pub kappa: f64,
    pub items: usize,
    pub raters: u32,
    pub category_counts: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub batch_id: String,
    pub complete_pairs: usize,
    pub total_pairs: usize,
    pub judgments: usize,
    pub required_judgments: usize,
}

struct Inner {
    state: State,
    history: Vec<Event>,
    log: Option<EventLog>,
}

impl Inner {
    fn commit(&mut self, event: Event) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            log.append(&event)?;
        }
        self.state.apply(&event);
        self.history.push(event);
        Ok(())
    }
}

pub struct Store {
    inner: Mutex<Inner>,
    clock: Arc<dyn Clock>,
    lease_secs: u64,
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::Match => "match",
        Label::NoMatch => "no_match",
    }
}

impl Store {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Store {
            inner: Mutex::new(Inner {
                state: State::default(),
                history: Vec::new(),
                log: None,
            }),
            clock,
            lease_secs: DEFAULT_LEASE_SECS,
        }
    }

    /// Opens a store backed by the event log at `path`, replaying it.
    pub fn open(path: &Path, clock: Arc<dyn Clock>) -> Result<Self> {
        let (log, history) = EventLog::open(path)?;
        Ok(Store {
            inner: Mutex::new(Inner {
                state: State::replay(&history),
                history,
                log: Some(log),
            }),
            clock,
            lease_secs: DEFAULT_LEASE_SECS,
        })
    }

    pub fn with_lease_secs(mut self, secs: u64) -> Self {
        self.lease_secs = secs.max(1);
        self
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn snapshot(&self) -> State {
        self.lock().state.clone()
    }

    pub fn events(&self) -> Vec<Event> {
        self.lock().history.clone()
    }

    pub fn create_batch(&self, req: NewBatch) -> Result<BatchSummary> {
        let raters = req.raters.unwrap_or(DEFAULT_RATERS);
        if raters == 0 {
            return Err(AnnotateError::InvalidBatch("raters must be at least 1".into()));
        }
        if req.tasks.is_empty() {
            return Err(AnnotateError::InvalidBatch("batch has no tasks".into()));
        }
        let mut seen_pairs = std::collections::BTreeSet::new();
        for (i, t) in req.tasks.iter().enumerate() {
            let n = t.candidates.len();
            if n == 0 || n > MAX_CANDIDATES {
                return Err(AnnotateError::InvalidBatch(format!(
                    "task {i} (faq {:?}) has {n} candidates; expected 1 to {MAX_CANDIDATES}",
                    t.faq.id
                )));
            }
            for c in &t.candidates {
                if !c.score.is_finite() {
                    return Err(AnnotateError::InvalidBatch(format!("candidate {:?} has a non-finite score", c.id)));
                }
                if !seen_pairs.insert((t.faq.id.clone(), c.id.clone())) {
                    return Err(AnnotateError::InvalidBatch(format!(
                        "pair ({}, {}) appears twice",
                        t.faq.id, c.id
                    )));
                }
            }
        }
        let mut inner = self.lock();
        let batch_id = inner.state.next_batch_id();
        let tasks: Vec<Task> = req
            .tasks
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut candidates = t.candidates;
                candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
                Task {
                    task_id: format!("{batch_id}-t{:04}", i + 1),
                    batch_id: batch_id.clone(),
                    faq: t.faq,
                    candidates,
                    raters,
                }
            })
            .collect();
        let pairs: usize = tasks.iter().map(|t| t.candidates.len()).sum();
        let summary = BatchSummary {
            batch_id: batch_id.clone(),
            task_ids: tasks.iter().map(|t| t.task_id.clone()).collect(),
            raters,
            pairs,
            required_judgments: pairs * raters as usize,
        };
        let at = self.clock.now();
        inner.commit(Event::BatchCreated {
            batch_id,
            raters,
            tasks,
            at,
        })?;
        Ok(summary)
    }

    /// Leases the lowest-id task that still has pairs this annotator may
    /// judge, or `None` when no such work remains.
    pub fn next_task(&self, annotator: &str) -> Result<Option<Assignment>> {
        if annotator.trim().is_empty() {
            return Err(AnnotateError::MissingAnnotator);
        }
        let mut inner = self.lock();
        let now = self.clock.now();
        let found = inner.state.tasks.values().find_map(|task| {
            let open: Vec<Candidate> = task
                .candidates
                .iter()
                .filter(|c| inner.state.can_judge(task, &c.id, annotator, now))
                .cloned()
                .collect();
            (!open.is_empty()).then(|| (task.clone(), open))
        });
        let Some((task, open)) = found else {
            return Ok(None);
        };
        let expires_at = now + self.lease_secs;
        inner.commit(Event::Assigned {
            task_id: task.task_id.clone(),
            annotator: annotator.to_string(),
            candidates: open.iter().map(|c| c.id.clone()).collect(),
            at: now,
            expires_at,
        })?;
        Ok(Some(Assignment {
            task_id: task.task_id,
            batch_id: task.batch_id,
            faq: task.faq,
            candidates: open,
            raters: task.raters,
            expires_at,
        }))
    }

    pub fn submit(&self, j: NewJudgment) -> Result<Ack> {
        if j.annotator.trim().is_empty() {
            return Err(AnnotateError::MissingAnnotator);
        }
        let rewrite = j.rewrite.map(|r| r.trim().to_string()).filter(|r| !r.is_empty());
        if j.label == Label::Match && rewrite.is_some() {
            return Err(AnnotateError::InvalidJudgment("a match judgment cannot carry a rewrite".into()));
        }
        let mut inner = self.lock();
        let now = self.clock.now();
        let task = inner
            .state
            .tasks
            .get(&j.task_id)
            .ok_or_else(|| AnnotateError::UnknownTask(j.task_id.clone()))?;
        if task.candidate(&j.candidate_id).is_none() {
            return Err(AnnotateError::UnknownCandidate {
                task: j.task_id,
                candidate: j.candidate_id,
            });
        }
        let raters = task.raters as usize;
        let ack = |duplicate, judgments| Ack {
            task_id: j.task_id.clone(),
            candidate_id: j.candidate_id.clone(),
            duplicate,
            judgments,
            complete: judgments >= raters,
        };
        if let Some(v) = inner.state.verdict(&j.task_id, &j.candidate_id, &j.annotator) {
            if v.label == j.label && v.rewrite == rewrite {
                return Ok(ack(true, inner.state.judgment_count(&j.task_id, &j.candidate_id)));
            }
            return Err(AnnotateError::Conflict {
                task: j.task_id,
                candidate: j.candidate_id,
                annotator: j.annotator,
            });
        }
        if !inner.state.can_judge(task, &j.candidate_id, &j.annotator, now) {
            return Err(AnnotateError::OverQuota {
                task: j.task_id,
                candidate: j.candidate_id,
            });
        }
        inner.commit(Event::Judged {
            task_id: j.task_id.clone(),
            candidate_id: j.candidate_id.clone(),
            annotator: j.annotator.clone(),
            label: j.label,
            rewrite,
            at: now,
        })?;
        Ok(ack(false, inner.state.judgment_count(&j.task_id, &j.candidate_id)))
    }

    fn batch_tasks(state: &State, batch_id: &str) -> Result<(u32, Vec<Task>)> {
        let batch = state
            .batches
            .get(batch_id)
            .ok_or_else(|| AnnotateError::UnknownBatch(batch_id.to_string()))?;
        Ok((
            batch.raters,
            batch.task_ids.iter().map(|t| state.tasks[t].clone()).collect(),
        ))
    }

    pub fn export(&self, batch_id: &str, policy: ExportPolicy) -> Result<Export> {
        let inner = self.lock();
        let (raters, tasks) = Self::batch_tasks(&inner.state, batch_id)?;
        let mut out = Export {
            batch_id: batch_id.to_string(),
            policy,
            labels: Vec::new(),
            rewrites: Vec::new(),
            complete_pairs: 0,
            skipped_incomplete: 0,
        };
        // rewrite ids are numbered per user question over the whole export
        let mut rewrite_seq: HashMap<&str, usize> = HashMap::new();
        for task in &tasks {
            for c in &task.candidates {
                let key = (task.task_id.clone(), c.id.clone());
                let votes = match inner.state.judgments.get(&key) {
                    Some(v) if v.len() >= raters as usize => v,
                    _ => {
                        out.skipped_incomplete += 1;
                        continue;
                    }
                };
                out.complete_pairs += 1;
                let matches = votes.values().filter(|v| v.label == Label::Match).count();
                let is_match = match policy {
                    ExportPolicy::Majority => 2 * matches > votes.len(),
                    ExportPolicy::Unanimous => matches == votes.len(),
                };
                out.labels.push(PairLabel {
                    faq_id: task.faq.id.clone(),
                    user_q_id: c.id.clone(),
                    label: if is_match { Label::Match } else { Label::NoMatch },
                });
                for v in votes.values().filter(|v| v.rewrite.is_some()) {
                    let n = rewrite_seq.entry(c.id.as_str()).or_insert(0);
                    *n += 1;
                    out.rewrites.push(RewriteRecord {
                        faq_id: task.faq.id.clone(),
                        user_q_id: format!("{}~rw{n}", c.id),
                        text: v.rewrite.clone().unwrap_or_default(),
                        rewritten_from: c.id.clone(),
                        label: Label::Match,
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn agreement(&self, batch_id: &str) -> Result<AgreementReport> {
        let inner = self.lock();
        let (raters, tasks) = Self::batch_tasks(&inner.state, batch_id)?;
        if raters < 2 {
            return Err(AnnotateError::AgreementUndefined(format!(
                "batch {batch_id} has a single rater per pair"
            )));
        }
        let mut items = Vec::new();
        let mut totals: BTreeMap<String, u32> = [Label::Match, Label::NoMatch]
            .into_iter()
            .map(|l| (label_name(l).to_string(), 0))
            .collect();
        for task in &tasks {
            for c in &task.candidates {
                let key = (task.task_id.clone(), c.id.clone());
                let Some(votes) = inner.state.judgments.get(&key) else {
                    continue;
                };
                if votes.len() < raters as usize {
                    continue;
                }
                let mut counts: BTreeMap<String, u32> = totals.keys().map(|k| (k.clone(), 0)).collect();
                for v in votes.values() {
                    *counts.get_mut(label_name(v.label)).expect("both labels present") += 1;
                }
                for (k, n) in &counts {
                    *totals.get_mut(k).expect("same keys") += n;
                }
                items.push(AgreementItem {
                    item_id: format!("{}/{}", task.task_id, c.id),
                    category_counts: counts,
                });
            }
        }
        if items.is_empty() {
            return Err(AnnotateError::AgreementUndefined(format!(
                "batch {batch_id} has no complete pairs"
            )));
        }
        let input = AgreementInput { items, raters };
        let kappa = fleiss_kappa(&input).map_err(|e| AnnotateError::AgreementUndefined(e.to_string()))?;
        Ok(AgreementReport {
            batch_id: batch_id.to_string(),
            kappa,
            items: input.items.len(),
            raters,
            category_counts: totals,
        })
    }

    pub fn progress(&self, batch_id: &str) -> Result<Progress> {
        let inner = self.lock();
        let (raters, tasks) = Self::batch_tasks(&inner.state, batch_id)?;
        let mut p = Progress {
            batch_id: batch_id.to_string(),
            complete_pairs: 0,
            total_pairs: 0,
            judgments: 0,
            required_judgments: 0,
        };
        for task in &tasks {
            for c in &task.candidates {
                let n = inner.state.judgment_count(&task.task_id, &c.id);
                p.total_pairs += 1;
                p.judgments += n;
                p.required_judgments += raters as usize;
                if n >= raters as usize {
                    p.complete_pairs += 1;
                }
            }
        }
        Ok(p)
    }
}
