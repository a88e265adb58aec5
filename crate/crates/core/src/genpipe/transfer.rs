use serde::{Deserialize, Serialize};

use super::generator::ModelService;
use super::harness::{
    run_rounds, BaselineSystem, ExperimentResult, GenerationSystem, RoundsConfig, ServiceSystem,
    SourceModels, TrainingPlan,
};
use super::samples::GenSample;
use super::split::SplitSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    /// Trained on the source domain only.
    SourceOnly,
    /// Trained on the target domain only.
    TargetOnly,
    /// Trained on the source domain, then on the target domain.
    FineTuned,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Baseline,
        Condition::SourceOnly,
        Condition::TargetOnly,
        Condition::FineTuned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::SourceOnly => "source_only",
            Condition::TargetOnly => "target_only",
            Condition::FineTuned => "fine_tuned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ConditionStatus {
    Completed { result: ExperimentResult },
    Unsupported { endpoint: String, feature: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOutcome {
    pub condition: Condition,
    pub status: ConditionStatus,
}

impl TransferOutcome {
    pub fn result(&self) -> Option<&ExperimentResult> {
        match &self.status {
            ConditionStatus::Completed { result } => Some(result),
            ConditionStatus::Unsupported { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// Rounds over the target domain; every condition is evaluated on the
    /// target test split.
    pub rounds: RoundsConfig,
    /// How the source domain is split when training a source model.
    pub source_split: SplitSpec,
}

/// Runs baseline, source-only, target-only and fine-tuned conditions. If
/// the service cannot continue training, the fine-tuned condition is
/// reported as unsupported and the rest still run. The baseline never
/// calls the service.
pub fn transfer_matrix(
    source: &[GenSample],
    target: &[GenSample],
    service: &dyn ModelService,
    config: &TransferConfig,
) -> Result<Vec<TransferOutcome>> {
    let sources = SourceModels::new(service, source, config.source_split);
    let mut out = Vec::with_capacity(Condition::ALL.len());
    for condition in Condition::ALL {
        let system: Box<dyn GenerationSystem> = match condition {
            Condition::Baseline => Box::new(BaselineSystem),
            Condition::SourceOnly => Box::new(ServiceSystem::new(
                condition.name(),
                service,
                TrainingPlan::SourceOnly(&sources),
            )),
            Condition::TargetOnly => Box::new(ServiceSystem::new(condition.name(), service, TrainingPlan::Target)),
            Condition::FineTuned => Box::new(ServiceSystem::new(
                condition.name(),
                service,
                TrainingPlan::FineTuned(&sources),
            )),
        };
        let status = match run_rounds(system.as_ref(), target, &config.rounds) {
            Ok(result) => ConditionStatus::Completed { result },
            Err(Error::Round { source, .. }) if matches!(*source, Error::Unsupported { .. }) => {
                let Error::Unsupported { endpoint, feature } = *source else {
                    unreachable!()
                };
                ConditionStatus::Unsupported { endpoint, feature }
            }
            Err(e) => return Err(e),
        };
        out.push(TransferOutcome { condition, status });
    }
    Ok(out)
}
