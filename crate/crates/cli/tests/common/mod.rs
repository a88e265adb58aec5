//! Helpers for driving the `faqkit` binary over the bundled fixtures.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn faqkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faqkit"))
        .args(args)
        .output()
        .expect("spawn faqkit")
}

/// Runs a command and fails with its stderr unless it exits 0.
pub fn ok(args: &[&str]) -> Output {
    let out = faqkit(args);
    if !out.status.success() {
        panic!(
            "faqkit {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    }
    out
}

pub fn read_lines(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|v| v.get("$header").is_none())
        .collect()
}

/// Toy user-question ids are `u-<faq>-<n>` for true matches of FAQ
/// `<faq>` and `u-x-<n>` for questions no FAQ answers.
pub fn is_true_match(faq_id: &str, user_q_id: &str) -> bool {
    user_q_id.starts_with(&format!("u-{faq_id}-"))
}

/// Three annotators judge every candidate. Two always follow the truth;
/// the third errs on the first candidate of every fourth FAQ, and when it
/// says no_match it supplies a rewrite. Majority labels therefore equal the
/// truth while unanimity does not always hold.
pub fn script_judgments(candidates: &Path, out: &Path) -> usize {
    let mut lines = Vec::new();
    for (fi, list) in read_lines(candidates).iter().enumerate() {
        let faq_id = list["faq_id"].as_str().unwrap();
        for (ci, c) in list["candidates"].as_array().unwrap().iter().enumerate() {
            let id = c["id"].as_str().unwrap();
            let truth = is_true_match(faq_id, id);
            for who in ["ann-1", "ann-2", "ann-3"] {
                let flip = who == "ann-3" && fi % 4 == 0 && ci == 0;
                let says_match = truth != flip;
                let mut j = json!({
                    "faq_id": faq_id,
                    "candidate_id": id,
                    "annotator": who,
                    "label": if says_match { "match" } else { "no_match" },
                });
                if !says_match && who == "ann-3" {
                    j["rewrite"] = json!(format!("rewritten question for {faq_id}"));
                }
                lines.push(j.to_string());
            }
        }
    }
    let mut f = std::fs::File::create(out).unwrap();
    for l in &lines {
        writeln!(f, "{l}").unwrap();
    }
    lines.len()
}

pub struct PipelineRun {
    pub dir: PathBuf,
    pub faqs: PathBuf,
    pub users: PathBuf,
    pub pool: PathBuf,
    pub reranked: PathBuf,
    pub labels: PathBuf,
    pub topics: PathBuf,
    pub samples: PathBuf,
    pub result: PathBuf,
}

impl PipelineRun {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// ingest → index → retrieve → create-batch → judge → export-labels →
/// train-ranker → rerank → build-dataset → prep-gen → eval, all on the toy
/// fixture inside `dir`.
pub fn run_pipeline(dir: &Path) -> PipelineRun {
    let p = |n: &str| dir.join(n);
    let run = PipelineRun {
        dir: dir.to_path_buf(),
        faqs: p("faqs.jsonl"),
        users: p("users.jsonl"),
        pool: p("pool.jsonl"),
        reranked: p("reranked.jsonl"),
        labels: p("labels.jsonl"),
        topics: p("topics.jsonl"),
        samples: p("samples.jsonl"),
        result: p("result.json"),
    };
    let (index, candidates, log, script, rewrites, model) = (
        p("index.json"),
        p("candidates.jsonl"),
        p("events.jsonl"),
        p("judgments.jsonl"),
        p("rewrites.jsonl"),
        p("ranker.json"),
    );
    let common = ["--seed", "7", "--no-timestamp"];
    let with = |args: &[&str]| {
        let mut v = args.to_vec();
        v.extend(common);
        ok(&v)
    };
    with(&["ingest", "--kind", "faq", "--input", s(&fixture("toy_faqs.jsonl")), "--output", s(&run.faqs)]);
    with(&["ingest", "--kind", "user", "--input", s(&fixture("toy_users.jsonl")), "--output", s(&run.users)]);
    with(&["index", "--input", s(&run.users), "--output", s(&index)]);
    let users_opts = ["--users", s(&run.users), "--index", s(&index)];
    let mut retrieve = vec!["retrieve", "--faqs", s(&run.faqs), "--k", "10", "--output", s(&candidates)];
    retrieve.extend(users_opts);
    with(&retrieve);
    with(&[
        "create-batch", "--log", s(&log), "--faqs", s(&run.faqs), "--users", s(&run.users),
        "--candidates", s(&candidates), "--raters", "3",
    ]);
    script_judgments(&candidates, &script);
    with(&["judge", "--log", s(&log), "--input", s(&script)]);
    with(&[
        "export-labels", "--log", s(&log), "--batch", "b0001", "--policy", "majority",
        "--output", s(&run.labels), "--rewrites", s(&rewrites),
    ]);
    let mut train = vec![
        "train-ranker", "--labels", s(&run.labels), "--faqs", s(&run.faqs), "--rewrites", s(&rewrites),
        "--output", s(&model),
    ];
    train.extend(users_opts);
    with(&train);
    let mut rerank = vec![
        "rerank", "--faqs", s(&run.faqs), "--model", s(&model), "--pool", "1000", "--top", "3",
        "--output", s(&run.reranked),
    ];
    rerank.extend(users_opts);
    with(&rerank);
    // the full BM25 pool, for checking rerank output against it
    let mut pool = vec!["retrieve", "--faqs", s(&run.faqs), "--k", "1000", "--output", s(&run.pool)];
    pool.extend(users_opts);
    with(&pool);
    with(&[
        "build-dataset", "--reranked", s(&run.reranked), "--faqs", s(&run.faqs), "--users", s(&run.users),
        "--labels", s(&run.labels), "--output", s(&run.topics),
    ]);
    with(&["prep-gen", "--topics", s(&run.topics), "--output", s(&run.samples)]);
    with(&[
        "eval", "--samples", s(&run.samples), "--generator", "baseline", "--rounds", "3",
        "--output", s(&run.result),
    ]);
    run
}

/// Problems with the rerank output: FAQs whose kept candidates are not in
/// their BM25 pool, or that kept more than `top`.
pub fn rerank_violations(run: &PipelineRun, top: usize) -> Vec<String> {
    let pools: BTreeMap<String, BTreeSet<String>> = read_lines(&run.pool)
        .iter()
        .map(|l| {
            let ids = l["candidates"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["id"].as_str().unwrap().to_string())
                .collect();
            (l["faq_id"].as_str().unwrap().to_string(), ids)
        })
        .collect();
    let mut bad = Vec::new();
    for l in read_lines(&run.reranked) {
        let faq = l["faq_id"].as_str().unwrap();
        let kept = l["candidates"].as_array().unwrap();
        if kept.len() > top {
            bad.push(format!("{faq}: kept {}", kept.len()));
        }
        let pool = &pools[faq];
        for c in kept {
            let id = c["id"].as_str().unwrap();
            if !pool.contains(id) {
                bad.push(format!("{faq}: {id} not in pool"));
            }
        }
    }
    bad
}

/// Mean of per-round scores recomputed from an eval report.
pub fn recomputed_mean(report: &Value) -> [f64; 3] {
    let rounds = report["result"]["rounds"].as_array().unwrap();
    let mut sum = [0.0; 3];
    for r in rounds {
        for (i, key) in ["rouge1_f", "rouge2_f", "rougeL_f"].iter().enumerate() {
            sum[i] += r["score"][key].as_f64().unwrap();
        }
    }
    sum.map(|x| x / rounds.len() as f64)
}

pub fn reported_mean(report: &Value) -> [f64; 3] {
    let m = &report["result"]["mean"];
    [m["rouge1_f"].as_f64().unwrap(), m["rouge2_f"].as_f64().unwrap(), m["rougeL_f"].as_f64().unwrap()]
}
