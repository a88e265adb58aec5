//! Descriptive and evaluation metrics.

pub mod agreement;
pub mod classify;
pub mod readability;
pub mod rouge;
pub mod stats;

pub use agreement::{fleiss_kappa, AgreementInput, AgreementItem};
pub use classify::{
    classify_percent, mean_grammar_errors, GrammarErrorCounter, LookupScorer, NullGrammarCounter,
    QuestionScorer, ThresholdRule, TokenClassifier,
};
pub use readability::{flesch_kincaid_grade, readability, ReadabilityReport};
pub use rouge::{lcs_len, rouge_all, rouge_l, rouge_n, RougeScore};
pub use stats::{corpus_stats, CorpusStats, DEFAULT_FIRST_WORD_THRESHOLD};
