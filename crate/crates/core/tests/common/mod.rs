//! Independent reference implementations used by the property tests.
#![allow(dead_code)]

use rand::Rng;

/// Clipped n-gram overlap by explicit matching: every candidate n-gram
/// claims the first unused equal n-gram of the reference.
pub fn ngram_overlap(cand: &[String], reference: &[String], n: usize) -> usize {
    if cand.len() < n || reference.len() < n {
        return 0;
    }
    let mut used = vec![false; reference.len() - n + 1];
    let mut overlap = 0;
    for i in 0..=cand.len() - n {
        for j in 0..used.len() {
            if !used[j] && cand[i..i + n] == reference[j..j + n] {
                used[j] = true;
                overlap += 1;
                break;
            }
        }
    }
    overlap
}

pub fn f1(overlap: usize, cand_total: usize, ref_total: usize) -> f64 {
    if overlap == 0 || cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

pub fn rouge_n(cand: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    refs.iter()
        .map(|r| {
            f1(
                ngram_overlap(cand, r, n),
                cand.len().saturating_sub(n - 1),
                r.len().saturating_sub(n - 1),
            )
        })
        .fold(0.0, f64::max)
}

fn is_subsequence(needle: &[&String], hay: &[String]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|y| y == *x))
}

/// Longest common subsequence by trying every subsequence of `a`.
pub fn lcs_exhaustive(a: &[String], b: &[String]) -> usize {
    assert!(a.len() <= 16, "exhaustive search is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<&String> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subsequence(&sub, b) {
            best = len;
        }
    }
    best
}

pub fn rouge_l(cand: &[String], refs: &[Vec<String>]) -> f64 {
    refs.iter()
        .map(|r| f1(lcs_exhaustive(cand, r), cand.len(), r.len()))
        .fold(0.0, f64::max)
}

/// Random token sequence of length `0..=max_len` over a small vocabulary,
/// so that overlaps are common.
pub fn random_tokens<R: Rng>(rng: &mut R, max_len: usize, vocab: usize) -> Vec<String> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect()
}

/// BM25 evaluated straight from the formula over raw token lists, then
/// sorted by score descending and id ascending.
pub fn bm25_ranking(docs: &[(String, Vec<String>)], query: &[String], k1: f64, b: f64) -> Vec<(String, f64)> {
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(|(_, t)| t.len()).sum();
    let avgdl = total as f64 / n;
    let mut terms: Vec<&String> = Vec::new();
    for t in query {
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    let mut out = Vec::new();
    for (id, toks) in docs {
        let dl = toks.len() as f64;
        let mut score = 0.0;
        for term in &terms {
            let tf = toks.iter().filter(|t| t == term).count();
            if tf == 0 {
                continue;
            }
            let df = docs.iter().filter(|(_, d)| d.contains(term)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let tf = tf as f64;
            let norm = k1 * (1.0 - b + b * dl / avgdl);
            score += idf * (tf * (k1 + 1.0)) / (tf + norm);
        }
        if score > 0.0 {
            out.push((id.clone(), score));
        }
    }
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

/// Fleiss's kappa from its textbook definition, item by item.
pub fn fleiss_kappa(counts: &[Vec<u32>], raters: u32) -> f64 {
    let r = raters as f64;
    let n = counts.len() as f64;
    let cats = counts[0].len();
    let p_i: Vec<f64> = counts
        .iter()
        .map(|row| row.iter().map(|&c| (c as f64) * (c as f64 - 1.0)).sum::<f64>() / (r * (r - 1.0)))
        .collect();
    let p_bar = p_i.iter().sum::<f64>() / n;
    let p_e: f64 = (0..cats)
        .map(|j| {
            let pj = counts.iter().map(|row| row[j] as f64).sum::<f64>() / (n * r);
            pj * pj
        })
        .sum();
    (p_bar - p_e) / (1.0 - p_e)
}
