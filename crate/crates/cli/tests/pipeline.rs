mod common;

use std::time::Instant;

use common::{faqkit, fixture, is_true_match, ok, read_lines, run_pipeline};
use serde_json::Value;

#[test]
fn toy_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let run = run_pipeline(dir.path());
    assert!(started.elapsed().as_secs() < 60, "pipeline took {:?}", started.elapsed());

    for l in read_lines(&run.path("candidates.jsonl")) {
        assert!(l["candidates"].as_array().unwrap().len() <= 10);
    }
    assert_eq!(common::rerank_violations(&run, 3), Vec::<String>::new());

    // majority labels equal the truth encoded in the ids
    let labels = read_lines(&run.labels);
    assert!(!labels.is_empty());
    for l in &labels {
        let truth = is_true_match(l["faq_id"].as_str().unwrap(), l["user_q_id"].as_str().unwrap());
        assert_eq!(l["label"] == "match", truth, "{l}");
    }
    let rewrites = read_lines(&run.path("rewrites.jsonl"));
    assert!(rewrites.iter().all(|r| r["user_q_id"].as_str().unwrap().contains("~rw")));

    // the trained ranker keeps mostly true matches
    let kept: Vec<(String, String)> = read_lines(&run.reranked)
        .iter()
        .flat_map(|l| {
            let faq = l["faq_id"].as_str().unwrap().to_string();
            l["candidates"]
                .as_array()
                .unwrap()
                .iter()
                .map(move |c| (faq.clone(), c["id"].as_str().unwrap().to_string()))
                .collect::<Vec<_>>()
        })
        .collect();
    let hits = kept.iter().filter(|(f, u)| is_true_match(f, u)).count();
    assert!(hits * 10 >= kept.len() * 9, "{hits}/{}", kept.len());

    let result: Value = serde_json::from_str(&std::fs::read_to_string(&run.result).unwrap()).unwrap();
    assert_eq!(result["$header"]["seed"], 7);
    assert_eq!(result["result"]["round_count"], 3);
    let recomputed = common::recomputed_mean(&result);
    for (a, b) in recomputed.iter().zip(common::reported_mean(&result)) {
        assert!((a - b).abs() <= 1e-12);
    }
}

fn eval_topics(seed: &str, out: &std::path::Path) -> Vec<u8> {
    ok(&[
        "eval", "--topics", fixture("topics20.jsonl").to_str().unwrap(), "--generator", "baseline",
        "--rounds", "10", "--seed", seed, "--no-timestamp", "--output", out.to_str().unwrap(),
    ]);
    std::fs::read(out).unwrap()
}

#[test]
fn baseline_eval_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = eval_topics("7", &dir.path().join("a.json"));
    let b = eval_topics("7", &dir.path().join("b.json"));
    assert_eq!(a, b);
    let c = eval_topics("8", &dir.path().join("c.json"));
    assert_ne!(a, c);

    let report: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["result"]["method_name"], "baseline");
    assert_eq!(report["result"]["round_count"], 10);
    let seeds: Vec<u64> = report["result"]["rounds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, (7..17).collect::<Vec<_>>());
    // 41 samples at 85/5/10
    let r0 = &report["result"]["rounds"][0];
    assert_eq!(
        [&r0["train_size"], &r0["validation_size"], &r0["test_size"]].map(|v| v.as_u64().unwrap()),
        [35, 2, 4]
    );
}

#[test]
fn jobs_do_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "eval", "--topics", fixture("topics20.jsonl").to_str().unwrap(), "--rounds", "4", "--seed", "3",
            "--jobs", jobs, "--no-timestamp", "--output", out.to_str().unwrap(),
        ]);
        std::fs::read(out).unwrap()
    };
    let one = run("1", "one.json");
    let four = run("4", "four.json");
    let a: Value = serde_json::from_slice(&one).unwrap();
    let b: Value = serde_json::from_slice(&four).unwrap();
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn timestamps_only_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    ok(&["prep-gen", "--topics", fixture("topics20.jsonl").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let first = std::fs::read_to_string(&out).unwrap();
    let header: Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert!(header["$header"]["created_at"].as_u64().is_some());
    assert_eq!(header["$header"]["command"], "prep-gen");
}

#[test]
fn usage_errors_exit_2() {
    let out = faqkit(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = faqkit(&["eval", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn runtime_errors_are_one_json_line() {
    let out = faqkit(&["index", "--input", "/definitely/missing.jsonl", "--output", "/tmp/x.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1);
    let v: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(v["error"]["kind"], "io");
    assert!(v["error"]["message"].as_str().unwrap().contains("missing.jsonl"));
}

#[test]
fn external_eval_needs_service() {
    let out = faqkit(&["eval", "--topics", fixture("topics20.jsonl").to_str().unwrap(), "--generator", "external"]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "usage");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"seed": 5, "rounds": 2, "no_timestamp": true, "split": {"level": "topic", "fractions": [0.8, 0.1, 0.1]}}"#,
    )
    .unwrap();
    let out = ok(&[
        "eval", "--config", cfg.to_str().unwrap(), "--topics", fixture("topics20.jsonl").to_str().unwrap(),
        "--rounds", "3",
    ]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["$header"]["seed"], 5);
    assert!(report["$header"].get("created_at").is_none());
    assert_eq!(report["result"]["round_count"], 3);
    assert_eq!(report["config"]["split"]["level"], "topic");
}

#[test]
fn small_commands() {
    let out = ok(&[
        "rouge", "--candidate", "how can i get tested ?", "--reference", "where can i go to get tested ?",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["rouge1_f"].as_f64().unwrap() - 5.0 / 7.0).abs() < 1e-12);

    let out = ok(&["readability", "--text", "where are you located ?"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["mean_grade"].as_f64().unwrap() - 3.67).abs() < 0.01);

    let out = ok(&["stats", "--input", fixture("toy_faqs.jsonl").to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["stats"]["question_count"], 30);
    assert_eq!(v["stats"]["first_word_dist"]["how"], 100.0);
}

#[test]
fn mask_and_split() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw.txt");
    std::fs::write(&raw, "Does Acme Corp hire students?\n\nacme corp benefits ?\nwhere is the office ?\n").unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&[
        "ingest", "--format", "text", "--id-prefix", "q", "--input", raw.to_str().unwrap(), "--output",
        corpus.to_str().unwrap(),
    ]);
    let masked = dir.path().join("m.jsonl");
    let out = ok(&["mask", "--alias", "Acme Corp", "--input", corpus.to_str().unwrap(), "--output", masked.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["changed"], 2);
    let texts: Vec<String> = read_lines(&masked).iter().map(|l| l["text"].as_str().unwrap().to_string()).collect();
    assert_eq!(texts[0], "Does ORG_NAME hire students?");
    assert_eq!(read_lines(&masked)[2]["id"], "q3");

    let parts = dir.path().join("parts");
    ok(&[
        "split", "--topics", fixture("topics20.jsonl").to_str().unwrap(), "--level", "topic", "--output-dir",
        parts.to_str().unwrap(),
    ]);
    let sizes: Vec<usize> = ["train", "validation", "test"]
        .iter()
        .map(|n| read_lines(&parts.join(format!("{n}.jsonl"))).len())
        .collect();
    assert_eq!(sizes.iter().sum::<usize>(), 41);
    let topics_of = |n: &str| -> std::collections::BTreeSet<String> {
        read_lines(&parts.join(format!("{n}.jsonl"))).iter().map(|l| l["topic"].as_str().unwrap().to_string()).collect()
    };
    assert!(topics_of("train").is_disjoint(&topics_of("test")));
    assert!(topics_of("validation").is_disjoint(&topics_of("test")));
}

#[test]
fn serve_answers_over_http() {
    use std::io::{BufRead, BufReader};
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let mut child = std::process::Command::new(env!("CARGO_BIN_EXE_faqkit"))
        .args(["serve", "--addr", "127.0.0.1:0", "--log", log.to_str().unwrap()])
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = serde_json::from_str::<Value>(&line).unwrap()["listening"].as_str().unwrap().to_string();
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let reply = agent.get(&format!("{url}/tasks/next?annotator=a")).call();
    child.kill().unwrap();
    child.wait().unwrap();
    let mut reply = reply.unwrap();
    assert_eq!(reply.status().as_u16(), 200);
    assert_eq!(reply.body_mut().read_to_string().unwrap(), r#"{"task":null}"#);
}
