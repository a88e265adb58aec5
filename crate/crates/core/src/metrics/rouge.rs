//! ROUGE-1, ROUGE-2 and ROUGE-L F1 with multi-reference support.
//!
//! Inputs are token sequences; no stemming or stopword removal is applied.
//! With several references the score for each metric is the maximum F1
//! over the references.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
}

impl RougeScore {
    /// Field-wise arithmetic mean; `None` for an empty slice.
    pub fn mean(scores: &[RougeScore]) -> Option<RougeScore> {
        if scores.is_empty() {
            return None;
        }
        let n = scores.len() as f64;
        let mut sum = RougeScore::default();
        for s in scores {
            sum.rouge1_f += s.rouge1_f;
            sum.rouge2_f += s.rouge2_f;
            sum.rouge_l_f += s.rouge_l_f;
        }
        Some(RougeScore {
            rouge1_f: sum.rouge1_f / n,
            rouge2_f: sum.rouge2_f / n,
            rouge_l_f: sum.rouge_l_f / n,
        })
    }
}

fn f1(overlap: usize, candidate_len: usize, reference_len: usize) -> f64 {
    if overlap == 0 || candidate_len == 0 || reference_len == 0 {
        return 0.0;
    }
    let p = overlap as f64 / candidate_len as f64;
    let r = overlap as f64 / reference_len as f64;
    2.0 * p * r / (p + r)
}

fn check_references<S: AsRef<str>>(references: &[Vec<S>]) -> Result<()> {
    if references.is_empty() {
        return Err(Error::InvalidInput("ROUGE needs at least one reference".into()));
    }
    if references.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("ROUGE references must be non-empty".into()));
    }
    Ok(())
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts
                .entry(w.iter().map(AsRef::as_ref).collect())
                .or_insert(0) += 1;
        }
    }
    counts
}

fn rouge_n_single<S: AsRef<str>, R: AsRef<str>>(candidate: &[S], reference: &[R], n: usize) -> f64 {
    let cand = ngram_counts(candidate, n);
    let refc = ngram_counts(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| refc.get(g).map_or(0, |&r| c.min(r)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    f1(overlap, cand_total, ref_total)
}

/// ROUGE-N F1 with clipped n-gram overlap; `n` must be 1 or 2.
pub fn rouge_n<S: AsRef<str>, R: AsRef<str>>(
    candidate: &[S],
    references: &[Vec<R>],
    n: usize,
) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidInput(format!("ROUGE-N supports n = 1 or 2, got {n}")));
    }
    check_references(references)?;
    Ok(references
        .iter()
        .map(|r| rouge_n_single(candidate, r, n))
        .fold(0.0, f64::max))
}

/// Length of the longest common subsequence.
pub fn lcs_len<S: AsRef<str>, R: AsRef<str>>(a: &[S], b: &[R]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence-level ROUGE-L F1 (LCS over whole sequences).
pub fn rouge_l<S: AsRef<str>, R: AsRef<str>>(candidate: &[S], references: &[Vec<R>]) -> Result<f64> {
    check_references(references)?;
    Ok(references
        .iter()
        .map(|r| f1(lcs_len(candidate, r), candidate.len(), r.len()))
        .fold(0.0, f64::max))
}

/// All three metrics, each maximised independently over references.
pub fn rouge_all<S: AsRef<str>, R: AsRef<str>>(
    candidate: &[S],
    references: &[Vec<R>],
) -> Result<RougeScore> {
    Ok(RougeScore {
        rouge1_f: rouge_n(candidate, references, 1)?,
        rouge2_f: rouge_n(candidate, references, 2)?,
        rouge_l_f: rouge_l(candidate, references)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identity_is_one() {
        let x = t("where are you located ?");
        let s = rouge_all(&x, std::slice::from_ref(&x)).unwrap();
        assert_eq!(s.rouge1_f, 1.0);
        assert_eq!(s.rouge2_f, 1.0);
        assert_eq!(s.rouge_l_f, 1.0);
    }

    #[test]
    fn generated_vs_target_unigram() {
        // clipped overlap {can, i, get, tested, ?} = 5; P = 5/6, R = 5/8
        let c = t("how can i get tested ?");
        let r = t("where can i go to get tested ?");
        let v = rouge_n(&c, &[r], 1).unwrap();
        assert!((v - 5.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(rouge_n(&t("a b"), &[t("c d")], 1).unwrap(), 0.0);
        assert_eq!(rouge_l(&t("a b"), &[t("c d")]).unwrap(), 0.0);
    }

    #[test]
    fn transposition_lcs() {
        let v = rouge_l(&t("a b c d"), &[t("a c b d")]).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn strict_subsequence() {
        let c = t("a c");
        let r = t("a b c d e");
        let v = rouge_l(&c, &[r]).unwrap();
        assert!((v - 2.0 * 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn clipping_limits_repeated_tokens() {
        // candidate repeats "the" three times, reference once
        let v = rouge_n(&t("the the the"), &[t("the cat")], 1).unwrap();
        let (p, r) = (1.0 / 3.0, 1.0 / 2.0);
        assert!((v - 2.0 * p * r / (p + r)).abs() < 1e-15);
    }

    #[test]
    fn single_token_has_no_bigrams() {
        assert_eq!(rouge_n(&t("go"), &[t("go")], 2).unwrap(), 0.0);
    }

    #[test]
    fn max_over_references() {
        let refs = vec![t("x y z"), t("how can i get tested ?")];
        assert_eq!(rouge_n(&t("how can i get tested ?"), &refs, 1).unwrap(), 1.0);
    }

    #[test]
    fn empty_reference_list_rejected() {
        let refs: Vec<Vec<String>> = vec![];
        assert!(rouge_n(&t("a"), &refs, 1).is_err());
        assert!(rouge_l(&t("a"), &refs).is_err());
        assert!(rouge_n(&t("a"), &[t("a")], 3).is_err());
        assert!(rouge_l(&t("a"), &[Vec::<String>::new()]).is_err());
    }

    #[test]
    fn mean_is_fieldwise() {
        let m = RougeScore::mean(&[
            RougeScore {
                rouge1_f: 1.0,
                rouge2_f: 1.0,
                rouge_l_f: 1.0,
            },
            RougeScore::default(),
        ])
        .unwrap();
        assert_eq!(m.rouge1_f, 0.5);
        assert_eq!(m.rouge_l_f, 0.5);
        assert!(RougeScore::mean(&[]).is_none());
    }
}
