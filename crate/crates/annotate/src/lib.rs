//! Crowd annotation backend for (FAQ, user question) pairs.
//!
//! Batches of FAQs with up to ten candidate user questions are handed out
//! to annotators under time-limited leases, so no pair ever collects more
//! than its required number of judgments. Every change is an event
//! appended to a line-delimited log ([`log::EventLog`]); the in-memory
//! [`model::State`] is a fold over those events.
//!
//! # Event log format
//!
//! One JSON object per line, discriminated by `"event"`:
//!
//! * `batch_created`: `batch_id`, `raters`, `tasks` (each with `task_id`,
//!   `batch_id`, `faq {id, text}`, `candidates [{id, text, score}]`,
//!   `raters`), `at`.
//! * `assigned`: `task_id`, `annotator`, `candidates` (ids leased),
//!   `at`, `expires_at`.
//! * `judged`: `task_id`, `candidate_id`, `annotator`, `label`
//!   (`match` | `no_match`), optional `rewrite`, `at`.
//!
//! Times are seconds since the Unix epoch.

pub mod api;
pub mod error;
pub mod log;
pub mod model;
pub mod store;

pub use error::{AnnotateError, Result};
pub use store::{
    Ack, AgreementReport, Assignment, BatchSummary, Clock, Export, ExportPolicy, ManualClock,
    NewBatch, NewJudgment, NewTask, Progress, RewriteRecord, Store, SystemClock,
};
