//! Building blocks for mining FAQ/user-question datasets and evaluating
//! FAQ generation.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] ingests, tokenizes and masks question collections.
//! * [`textindex`] indexes user questions and retrieves BM25 candidates.
//! * [`ranker`] re-scores (FAQ, user question) pairs with a trainable
//!   classifier or an external model service and re-ranks BM25 pools.
//! * [`metrics`] implements ROUGE, Flesch-Kincaid, corpus statistics,
//!   pluggable percent classifiers and Fleiss's kappa.
//! * [`genpipe`] builds generation samples, splits them and runs the
//!   multi-round evaluation harness.

pub mod corpus;
pub mod error;
pub mod genpipe;
pub mod jsonl;
pub mod logistic;
pub mod metrics;
pub mod ranker;
pub mod service;
pub mod textindex;

pub use error::{Error, Result};
