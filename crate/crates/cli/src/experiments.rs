use faqkit_core::genpipe::{
    self, run_rounds, transfer_matrix, BaselineSystem, GenSample, GenerationSystem, HttpModelService, RoundsConfig,
    ServiceSystem, TrainingPlan, TransferConfig, TransferOutcome,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{EvalArgs, GeneratorKind, PrepGenArgs, SamplesOpts, SplitArgs, TransferArgs};
use crate::error::{CliError, Result};
use crate::output::{summary, Ctx};

fn load_samples(ctx: &Ctx, opts: &SamplesOpts) -> Result<Vec<GenSample>> {
    match (&opts.samples, &opts.topics) {
        (Some(p), _) => Ok(genpipe::load_samples(p)?),
        (None, Some(p)) => Ok(genpipe::build_samples(&genpipe::load_topics(p)?, ctx.seed)),
        (None, None) => Err(CliError::Usage("need --samples or --topics".into())),
    }
}

pub fn prep_gen(ctx: &Ctx, a: PrepGenArgs) -> Result<()> {
    let topics = genpipe::load_topics(&a.topics)?;
    let samples = genpipe::build_samples(&topics, ctx.seed);
    genpipe::save_samples(&a.output, &samples, Some(&ctx.header()))?;
    summary(json!({ "topics": topics.len(), "samples": samples.len() }));
    Ok(())
}

pub fn split(ctx: &Ctx, a: SplitArgs) -> Result<()> {
    let samples = load_samples(ctx, &a.input)?;
    let spec = a.split.spec(ctx.seed)?;
    let part = genpipe::split_samples(&samples, &spec)?;
    std::fs::create_dir_all(&a.output_dir).map_err(|e| CliError::io(&a.output_dir, e))?;
    let header = ctx.header();
    for (name, items) in [("train", &part.train), ("validation", &part.validation), ("test", &part.test)] {
        genpipe::save_samples(&a.output_dir.join(format!("{name}.jsonl")), items, Some(&header))?;
    }
    summary(json!({
        "train": part.train.len(),
        "validation": part.validation.len(),
        "test": part.test.len(),
    }));
    Ok(())
}

#[derive(Serialize)]
struct EvalReport<'a> {
    config: &'a RoundsConfig,
    result: genpipe::ExperimentResult,
}

pub fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let samples = load_samples(ctx, &a.input)?;
    let config = RoundsConfig {
        rounds: a.rounds,
        split: a.split.spec(ctx.seed)?,
        seed_base: ctx.seed,
        artifacts_dir: a.artifacts_dir.clone(),
        jobs: ctx.jobs,
    };
    let service;
    let system: Box<dyn GenerationSystem> = match a.generator {
        GeneratorKind::Baseline => Box::new(BaselineSystem),
        GeneratorKind::External => {
            service = HttpModelService::new(a.service.require("for --generator external")?);
            Box::new(ServiceSystem::new("external", &service, TrainingPlan::Target))
        }
    };
    let result = run_rounds(system.as_ref(), &samples, &config)?;
    ctx.report(a.output.as_deref(), &EvalReport { config: &config, result })
}

#[derive(Serialize)]
struct TransferReport<'a> {
    config: &'a TransferConfig,
    outcomes: Vec<TransferOutcome>,
}

pub fn transfer(ctx: &Ctx, a: TransferArgs) -> Result<()> {
    let source = genpipe::load_samples(&a.source)?;
    let target = genpipe::load_samples(&a.target)?;
    let service = HttpModelService::new(a.service.require("for transfer")?);
    let split = a.split.spec(ctx.seed)?;
    let config = TransferConfig {
        rounds: RoundsConfig {
            rounds: a.rounds,
            split,
            seed_base: ctx.seed,
            artifacts_dir: a.artifacts_dir.clone(),
            jobs: ctx.jobs,
        },
        source_split: split,
    };
    let outcomes = transfer_matrix(&source, &target, &service, &config)?;
    ctx.report(a.output.as_deref(), &TransferReport { config: &config, outcomes })
}
