use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::generator::{BaselineGenerator, ExternalGenerator, Generator, ModelService, TrainPair};
use super::samples::{save_samples, GenSample};
use super::split::{split_samples, SplitSpec};
use crate::jsonl::ArtifactHeader;
use crate::metrics::rouge::{rouge_all, RougeScore};
use crate::{Error, Result};

fn score_one(generator: &dyn Generator, sample: &GenSample) -> Result<RougeScore> {
    let out = generator.generate(sample)?;
    rouge_all(&out, &sample.references)
}

/// Mean ROUGE-1/2/L F1 of the generator's outputs, each sample scored
/// against its own references.
pub fn evaluate(generator: &dyn Generator, samples: &[GenSample]) -> Result<RougeScore> {
    evaluate_parallel(generator, samples, 1)
}

/// Same as [`evaluate`] with samples spread over `jobs` threads. The
/// result does not depend on `jobs`.
pub fn evaluate_parallel(generator: &dyn Generator, samples: &[GenSample], jobs: usize) -> Result<RougeScore> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty test set".into()));
    }
    let jobs = jobs.clamp(1, samples.len());
    let scores: Vec<RougeScore> = if jobs == 1 {
        samples
            .iter()
            .map(|s| score_one(generator, s))
            .collect::<Result<_>>()?
    } else {
        let chunk = samples.len().div_ceil(jobs);
        std::thread::scope(|scope| {
            let handles: Vec<_> = samples
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|s| score_one(generator, s))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(samples.len());
            for h in handles {
                all.extend(h.join().expect("evaluation thread panicked")?);
            }
            Ok::<_, Error>(all)
        })?
    };
    Ok(RougeScore::mean(&scores).expect("non-empty"))
}

/// What a generation system sees at the start of a round.
#[derive(Debug, Clone, Copy)]
pub struct RoundContext<'a> {
    pub round: usize,
    pub seed: u64,
    pub train: &'a [GenSample],
    pub validation: &'a [GenSample],
    pub artifacts_dir: Option<&'a Path>,
}

/// Something that can be (re)built for each round and then generate.
pub trait GenerationSystem: Sync {
    fn name(&self) -> String;

    fn prepare<'s>(&'s self, ctx: &RoundContext<'_>) -> Result<Box<dyn Generator + 's>>;
}

/// Random-input baseline, seeded with the round seed. Ignores training data.
#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineSystem;

impl GenerationSystem for BaselineSystem {
    fn name(&self) -> String {
        "baseline".into()
    }

    fn prepare<'s>(&'s self, ctx: &RoundContext<'_>) -> Result<Box<dyn Generator + 's>> {
        Ok(Box::new(BaselineGenerator::new(ctx.seed)))
    }
}

fn pairs(samples: &[GenSample]) -> Vec<TrainPair> {
    samples.iter().map(TrainPair::from_sample).collect()
}

fn write_round_files(dir: &Path, name: &str, seed: u64, train: &[GenSample], validation: &[GenSample]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = ArtifactHeader {
        tool: "faqkit".into(),
        command: name.into(),
        seed,
        created_at: None,
    };
    save_samples(&dir.join("train.jsonl"), train, Some(&header))?;
    save_samples(&dir.join("validation.jsonl"), validation, Some(&header))
}

fn round_dir(base: &Path, round: usize, name: &str) -> PathBuf {
    base.join(format!("round-{round:02}")).join(name)
}

/// Source-domain models, one per round seed, trained on demand and shared
/// between the conditions that need them.
pub struct SourceModels<'a> {
    service: &'a dyn ModelService,
    samples: &'a [GenSample],
    split: SplitSpec,
    cache: Mutex<BTreeMap<u64, String>>,
}

impl<'a> SourceModels<'a> {
    pub fn new(service: &'a dyn ModelService, samples: &'a [GenSample], split: SplitSpec) -> Self {
        SourceModels {
            service,
            samples,
            split,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn model_for(&self, ctx: &RoundContext<'_>) -> Result<String> {
        let mut cache = self.cache.lock().expect("source model cache poisoned");
        if let Some(id) = cache.get(&ctx.seed) {
            return Ok(id.clone());
        }
        let part = split_samples(self.samples, &self.split.with_seed(ctx.seed))?;
        if let Some(dir) = ctx.artifacts_dir {
            write_round_files(&round_dir(dir, ctx.round, "source"), "source", ctx.seed, &part.train, &part.validation)?;
        }
        let id = self.service.train(&pairs(&part.train), &pairs(&part.validation), None)?;
        cache.insert(ctx.seed, id.clone());
        Ok(id)
    }
}

/// How a service-backed system obtains its model for a round.
pub enum TrainingPlan<'a> {
    /// Train from scratch on the round's training split.
    Target,
    /// Use the source-domain model as is.
    SourceOnly(&'a SourceModels<'a>),
    /// Continue training the source-domain model on the round's split.
    FineTuned(&'a SourceModels<'a>),
}

pub struct ServiceSystem<'a> {
    pub name: String,
    pub service: &'a dyn ModelService,
    pub plan: TrainingPlan<'a>,
}

impl<'a> ServiceSystem<'a> {
    pub fn new(name: impl Into<String>, service: &'a dyn ModelService, plan: TrainingPlan<'a>) -> Self {
        ServiceSystem {
            name: name.into(),
            service,
            plan,
        }
    }
}

impl GenerationSystem for ServiceSystem<'_> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn prepare<'s>(&'s self, ctx: &RoundContext<'_>) -> Result<Box<dyn Generator + 's>> {
        let model_id = match &self.plan {
            TrainingPlan::SourceOnly(src) => src.model_for(ctx)?,
            plan => {
                if let Some(dir) = ctx.artifacts_dir {
                    write_round_files(&round_dir(dir, ctx.round, &self.name), &self.name, ctx.seed, ctx.train, ctx.validation)?;
                }
                let init = match plan {
                    TrainingPlan::FineTuned(src) => Some(src.model_for(ctx)?),
                    _ => None,
                };
                self.service
                    .train(&pairs(ctx.train), &pairs(ctx.validation), init.as_deref())?
            }
        };
        Ok(Box::new(ExternalGenerator::new(self.service, model_id)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundsConfig {
    pub rounds: usize,
    /// Split template; its seed is replaced by each round's seed.
    pub split: SplitSpec,
    pub seed_base: u64,
    #[serde(default)]
    pub artifacts_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub jobs: usize,
}

fn one() -> usize {
    1
}

impl Default for RoundsConfig {
    fn default() -> Self {
        RoundsConfig {
            rounds: 10,
            split: SplitSpec::sample_level(0),
            seed_base: 0,
            artifacts_dir: None,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: usize,
    pub seed: u64,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub score: RougeScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method_name: String,
    pub rounds: Vec<RoundResult>,
    pub mean: RougeScore,
    pub round_count: usize,
}

impl ExperimentResult {
    pub fn from_rounds(method_name: impl Into<String>, rounds: Vec<RoundResult>) -> Result<Self> {
        let scores: Vec<RougeScore> = rounds.iter().map(|r| r.score).collect();
        let mean = RougeScore::mean(&scores)
            .ok_or_else(|| Error::InvalidInput("an experiment needs at least one round".into()))?;
        Ok(ExperimentResult {
            method_name: method_name.into(),
            round_count: rounds.len(),
            rounds,
            mean,
        })
    }
}

/// Runs `config.rounds` rounds. Round `i` (0-based) splits with seed
/// `seed_base + i`, prepares the system on that split and scores it on the
/// test partition. The first failure aborts with the round index.
pub fn run_rounds(system: &dyn GenerationSystem, samples: &[GenSample], config: &RoundsConfig) -> Result<ExperimentResult> {
    if config.rounds == 0 {
        return Err(Error::InvalidInput("rounds must be at least 1".into()));
    }
    let mut rounds = Vec::with_capacity(config.rounds);
    for round in 0..config.rounds {
        let seed = config.seed_base.wrapping_add(round as u64);
        let result = (|| {
            let part = split_samples(samples, &config.split.with_seed(seed))?;
            let ctx = RoundContext {
                round,
                seed,
                train: &part.train,
                validation: &part.validation,
                artifacts_dir: config.artifacts_dir.as_deref(),
            };
            let generator = system.prepare(&ctx)?;
            let score = evaluate_parallel(generator.as_ref(), &part.test, config.jobs)?;
            Ok(RoundResult {
                round,
                seed,
                train_size: part.train.len(),
                validation_size: part.validation.len(),
                test_size: part.test.len(),
                score,
            })
        })();
        rounds.push(result.map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })?);
    }
    ExperimentResult::from_rounds(system.name(), rounds)
}
