//! Event types and the derived state they fold into.

use std::collections::BTreeMap;

use faqkit_core::ranker::Label;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RATERS: u32 = 3;
pub const MAX_CANDIDATES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaqRef {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub batch_id: String,
    pub faq: FaqRef,
    /// Ordered by presented score, best first.
    pub candidates: Vec<Candidate>,
    pub raters: u32,
}

impl Task {
    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidates.iter().find(|c| c.id == id)
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    BatchCreated {
        batch_id: String,
        raters: u32,
        tasks: Vec<Task>,
        at: u64,
    },
    Assigned {
        task_id: String,
        annotator: String,
        candidates: Vec<String>,
        at: u64,
        expires_at: u64,
    },
    Judged {
        task_id: String,
        candidate_id: String,
        annotator: String,
        label: Label,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rewrite: Option<String>,
        at: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: Label,
    pub rewrite: Option<String>,
    pub at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub id: String,
    pub raters: u32,
    pub task_ids: Vec<String>,
}

pub type PairKey = (String, String);

/// Everything the service knows, rebuilt by folding events in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct State {
    pub batches: BTreeMap<String, Batch>,
    pub tasks: BTreeMap<String, Task>,
    /// (task, candidate) -> annotator -> verdict
    pub judgments: BTreeMap<PairKey, BTreeMap<String, Verdict>>,
    /// (task, candidate) -> annotator -> lease expiry
    pub leases: BTreeMap<PairKey, BTreeMap<String, u64>>,
    pub events: u64,
}

impl State {
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a Event>) -> Self {
        let mut s = State::default();
        for e in events {
            s.apply(e);
        }
        s
    }

    pub fn apply(&mut self, event: &Event) {
        self.events += 1;
        match event {
            Event::BatchCreated {
                batch_id,
                raters,
                tasks,
                ..
            } => {
                self.batches.insert(
                    batch_id.clone(),
                    Batch {
                        id: batch_id.clone(),
                        raters: *raters,
                        task_ids: tasks.iter().map(|t| t.task_id.clone()).collect(),
                    },
                );
                for t in tasks {
                    self.tasks.insert(t.task_id.clone(), t.clone());
                }
            }
            Event::Assigned {
                task_id,
                annotator,
                candidates,
                expires_at,
                ..
            } => {
                for c in candidates {
                    self.leases
                        .entry((task_id.clone(), c.clone()))
                        .or_default()
                        .insert(annotator.clone(), *expires_at);
                }
            }
            Event::Judged {
                task_id,
                candidate_id,
                annotator,
                label,
                rewrite,
                at,
            } => {
                let key = (task_id.clone(), candidate_id.clone());
                if let Some(l) = self.leases.get_mut(&key) {
                    l.remove(annotator);
                    if l.is_empty() {
                        self.leases.remove(&key);
                    }
                }
                self.judgments.entry(key).or_default().insert(
                    annotator.clone(),
                    Verdict {
                        label: *label,
                        rewrite: rewrite.clone(),
                        at: *at,
                    },
                );
            }
        }
    }

    pub fn next_batch_id(&self) -> String {
        format!("b{:04}", self.batches.len() + 1)
    }

    pub fn judgment_count(&self, task_id: &str, candidate_id: &str) -> usize {
        self.judgments
            .get(&(task_id.to_string(), candidate_id.to_string()))
            .map_or(0, BTreeMap::len)
    }

    pub fn verdict(&self, task_id: &str, candidate_id: &str, annotator: &str) -> Option<&Verdict> {
        self.judgments
            .get(&(task_id.to_string(), candidate_id.to_string()))
            .and_then(|m| m.get(annotator))
    }

    /// Live leases on a pair held by anyone other than `annotator`.
    pub fn other_leases(&self, key: &PairKey, annotator: &str, now: u64) -> usize {
        self.leases.get(key).map_or(0, |m| {
            m.iter()
                .filter(|(a, &exp)| a.as_str() != annotator && exp > now)
                .count()
        })
    }

    pub fn holds_lease(&self, key: &PairKey, annotator: &str, now: u64) -> bool {
        self.leases
            .get(key)
            .and_then(|m| m.get(annotator))
            .is_some_and(|&exp| exp > now)
    }

    /// Whether `annotator` may still judge the pair: not judged by them,
    /// and either they hold a live lease or there is a free slot.
    pub fn can_judge(&self, task: &Task, candidate_id: &str, annotator: &str, now: u64) -> bool {
        let key = (task.task_id.clone(), candidate_id.to_string());
        let judged = self.judgments.get(&key);
        if judged.is_some_and(|m| m.contains_key(annotator)) {
            return false;
        }
        if self.holds_lease(&key, annotator, now) {
            return true;
        }
        let used = judged.map_or(0, BTreeMap::len) + self.other_leases(&key, annotator, now);
        used < task.raters as usize
    }
}
