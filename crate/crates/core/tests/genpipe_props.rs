use std::collections::BTreeSet;

use faqkit_core::corpus::tokenize;
use faqkit_core::genpipe::{
    build_samples, evaluate, run_rounds, split_samples, BaselineGenerator, BaselineSystem,
    FnGenerator, GenSample, Generator, RoundsConfig, SplitSpec, Topic,
};
use faqkit_core::metrics::RougeScore;
use proptest::prelude::*;

fn topic_set(shape: &[(usize, usize)]) -> Vec<Topic> {
    shape
        .iter()
        .enumerate()
        .map(|(t, &(n, k))| {
            let uqs: Vec<String> = (0..n).map(|i| format!("user {t} asks thing {i}")).collect();
            let faqs: Vec<String> = (0..k).map(|i| format!("faq {t} number {i} ?")).collect();
            Topic::from_texts(&format!("topic-{t}"), &uqs, &faqs).unwrap()
        })
        .collect()
}

fn arb_shape() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((1usize..25, 1usize..5), 10..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn samples_follow_topic_shape(shape in arb_shape(), seed in any::<u64>()) {
        let topics = topic_set(&shape);
        let samples = build_samples(&topics, seed);
        prop_assert_eq!(samples.len(), shape.iter().map(|&(_, k)| k).sum::<usize>());
        let mut at = 0;
        for (topic, &(n, k)) in topics.iter().zip(&shape) {
            let ids: BTreeSet<&str> = topic.user_questions.iter().map(|q| q.id()).collect();
            for s in &samples[at..at + k] {
                prop_assert_eq!(s.inputs.len(), n.min(10));
                prop_assert_eq!(s.references.len(), k);
                prop_assert!(s.references.contains(&s.target));
                let distinct: BTreeSet<&str> = s.input_ids.iter().map(String::as_str).collect();
                prop_assert_eq!(distinct.len(), s.input_ids.len());
                prop_assert!(distinct.is_subset(&ids));
            }
            at += k;
        }
        prop_assert_eq!(build_samples(&topics, seed), samples);
    }

    #[test]
    fn topic_split_keeps_user_questions_apart(shape in arb_shape(), seed in any::<u64>()) {
        let samples = build_samples(&topic_set(&shape), seed);
        let part = split_samples(&samples, &SplitSpec::topic_level(seed)).unwrap();
        let ids = |v: &[GenSample]| -> BTreeSet<String> {
            v.iter().flat_map(|s| s.input_ids.iter().cloned()).collect()
        };
        let (a, b, c) = (ids(&part.train), ids(&part.validation), ids(&part.test));
        prop_assert!(a.is_disjoint(&b));
        prop_assert!(a.is_disjoint(&c));
        prop_assert!(b.is_disjoint(&c));
        prop_assert_eq!(part.train.len() + part.validation.len() + part.test.len(), samples.len());
    }
}

fn five_input_sample(key: u64) -> GenSample {
    GenSample {
        inputs: (0..5).map(|i| vec![format!("input{i}")]).collect(),
        input_ids: (0..5).map(|i| format!("u{i}")).collect(),
        target: vec!["t".into()],
        references: vec![vec!["t".into()]],
        topic: None,
        key,
    }
}

#[test]
fn baseline_is_uniform_over_seeds() {
    let s = five_input_sample(17);
    let mut counts = [0usize; 5];
    for seed in 0..1000 {
        counts[BaselineGenerator::new(seed).pick(&s).unwrap()] += 1;
    }
    for c in counts {
        let pct = c as f64 / 10.0;
        assert!((pct - 20.0).abs() <= 5.0, "{counts:?}");
    }
}

#[test]
fn baseline_beats_disjoint_generator() {
    // inputs share words with the FAQ; a constant unrelated output does not
    let topics: Vec<Topic> = (0..20)
        .map(|t| {
            Topic::from_texts(
                &format!("t{t}"),
                &[format!("how to renew permit {t}"), format!("renew my permit {t} please")],
                &[format!("how do i renew permit {t} ?")],
            )
            .unwrap()
        })
        .collect();
    let samples = build_samples(&topics, 0);
    let junk = FnGenerator(|_: &GenSample| Ok(tokenize("zzz qqq")));
    let base = evaluate(&BaselineGenerator::new(3), &samples).unwrap();
    let worst = evaluate(&junk, &samples).unwrap();
    assert!(base.rouge1_f >= worst.rouge1_f);
    assert!(base.rouge2_f >= worst.rouge2_f);
    assert!(base.rouge_l_f >= worst.rouge_l_f);
    assert!(base.rouge1_f > 0.0);
}

#[test]
fn rounds_mean_recomputes() {
    let samples = build_samples(&topic_set(&[(12, 2); 20]), 5);
    let config = RoundsConfig {
        split: SplitSpec::topic_level(0),
        seed_base: 7,
        ..RoundsConfig::default()
    };
    let r = run_rounds(&BaselineSystem, &samples, &config).unwrap();
    assert_eq!(r.round_count, r.rounds.len());
    let scores: Vec<RougeScore> = r.rounds.iter().map(|x| x.score).collect();
    let n = scores.len() as f64;
    let r1 = scores.iter().map(|s| s.rouge1_f).sum::<f64>() / n;
    let r2 = scores.iter().map(|s| s.rouge2_f).sum::<f64>() / n;
    let rl = scores.iter().map(|s| s.rouge_l_f).sum::<f64>() / n;
    assert!((r1 - r.mean.rouge1_f).abs() <= 1e-12);
    assert!((r2 - r.mean.rouge2_f).abs() <= 1e-12);
    assert!((rl - r.mean.rouge_l_f).abs() <= 1e-12);
    assert_eq!(run_rounds(&BaselineSystem, &samples, &config).unwrap(), r);
}

#[test]
fn generator_trait_objects_compose() {
    let s = five_input_sample(0);
    let gens: Vec<Box<dyn Generator>> = vec![
        Box::new(BaselineGenerator::new(1)),
        Box::new(FnGenerator(|s: &GenSample| Ok(s.inputs[0].clone()))),
    ];
    for g in &gens {
        assert!(s.inputs.contains(&g.generate(&s).unwrap()));
    }
}
