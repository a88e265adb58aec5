use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use faqkit_core::corpus::QuestionKind;
use faqkit_core::genpipe::{SplitLevel, SplitSpec};
use faqkit_core::service::ServiceConfig;
use faqkit_core::textindex::Bm25Params;

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "faqkit", version, about = "Mine FAQ/user-question datasets and evaluate FAQ generation")]
pub struct Cli {
    /// JSON file of defaults; keys are flag names, nested objects are flattened.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Leave creation times out of artifact headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a raw question file into a corpus.
    Ingest(IngestArgs),
    /// Replace organization names with a placeholder.
    Mask(MaskArgs),
    /// Build a BM25 index over user questions.
    Index(IndexArgs),
    /// Retrieve BM25 candidates for every FAQ.
    Retrieve(RetrieveArgs),
    /// Run the annotation service.
    Serve(ServeArgs),
    /// Turn a candidates file into an annotation batch.
    CreateBatch(CreateBatchArgs),
    /// Record judgments from a file.
    Judge(JudgeArgs),
    /// Export aggregated labels of a batch.
    ExportLabels(ExportLabelsArgs),
    /// Inter-annotator agreement of a batch or a counts file.
    Agreement(AgreementArgs),
    /// Judgment progress of a batch.
    Progress(ProgressArgs),
    /// Train the pair classifier on exported labels.
    TrainRanker(TrainRankerArgs),
    /// Re-score BM25 pools and keep the best candidates per FAQ.
    Rerank(RerankArgs),
    /// Group re-ranked matches into topics.
    BuildDataset(BuildDatasetArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Flesch-Kincaid grade.
    Readability(ReadabilityArgs),
    /// ROUGE-1/2/L F1.
    Rouge(RougeArgs),
    /// Build generation samples from topics.
    PrepGen(PrepGenArgs),
    /// Split samples into train/validation/test files.
    Split(SplitArgs),
    /// Multi-round generation evaluation.
    Eval(EvalArgs),
    /// Source/target transfer experiment.
    Transfer(TransferArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Mask(_) => "mask",
            Command::Index(_) => "index",
            Command::Retrieve(_) => "retrieve",
            Command::Serve(_) => "serve",
            Command::CreateBatch(_) => "create-batch",
            Command::Judge(_) => "judge",
            Command::ExportLabels(_) => "export-labels",
            Command::Agreement(_) => "agreement",
            Command::Progress(_) => "progress",
            Command::TrainRanker(_) => "train-ranker",
            Command::Rerank(_) => "rerank",
            Command::BuildDataset(_) => "build-dataset",
            Command::Stats(_) => "stats",
            Command::Readability(_) => "readability",
            Command::Rouge(_) => "rouge",
            Command::PrepGen(_) => "prep-gen",
            Command::Split(_) => "split",
            Command::Eval(_) => "eval",
            Command::Transfer(_) => "transfer",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    User,
    Faq,
}

impl From<Kind> for QuestionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::User => QuestionKind::UserQuestion,
            Kind::Faq => QuestionKind::OrgFaq,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InputFormat {
    /// One JSON record per line.
    Jsonl,
    /// One question per non-empty line.
    Text,
}

#[derive(Debug, Args)]
pub struct Bm25Opts {
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
}

impl Bm25Opts {
    pub fn params(&self) -> Result<Bm25Params> {
        Ok(Bm25Params::new(self.k1, self.b)?)
    }
}

#[derive(Debug, Args)]
pub struct ServiceOpts {
    /// Base URL of the model service.
    #[arg(long, value_name = "URL")]
    pub service: Option<String>,
    #[arg(long, default_value_t = 30.0)]
    pub timeout_secs: f64,
    /// Cap on concurrent requests to the service.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
}

impl ServiceOpts {
    pub fn config(&self) -> Option<ServiceConfig> {
        self.service.as_ref().map(|url| ServiceConfig {
            base_url: url.clone(),
            timeout_secs: self.timeout_secs,
            max_in_flight: self.max_in_flight,
        })
    }

    pub fn require(&self, why: &str) -> Result<ServiceConfig> {
        self.config()
            .ok_or_else(|| CliError::Usage(format!("--service is required {why}")))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Level {
    Sample,
    Topic,
}

#[derive(Debug, Args)]
pub struct SplitOpts {
    /// Split individual samples or whole topics.
    #[arg(long, value_enum, default_value_t = Level::Sample)]
    pub level: Level,
    /// train,validation,test fractions. Defaults to 0.85,0.05,0.10 for
    /// sample level and 0.80,0.10,0.10 for topic level.
    #[arg(long, value_name = "T,V,T")]
    pub fractions: Option<String>,
}

impl SplitOpts {
    pub fn spec(&self, seed: u64) -> Result<SplitSpec> {
        let level = match self.level {
            Level::Sample => SplitLevel::Sample,
            Level::Topic => SplitLevel::Topic,
        };
        let Some(text) = &self.fractions else {
            return Ok(match level {
                SplitLevel::Sample => SplitSpec::sample_level(seed),
                SplitLevel::Topic => SplitSpec::topic_level(seed),
            });
        };
        let parts: Vec<f64> = text
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CliError::Usage(format!("--fractions {text:?}: {e}")))?;
        let [t, v, s] = parts[..] else {
            return Err(CliError::Usage(format!("--fractions needs three values, got {text:?}")));
        };
        Ok(SplitSpec::new((t, v, s), level, seed)?)
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::User)]
    pub kind: Kind,
    #[arg(long, value_enum, default_value_t = InputFormat::Jsonl)]
    pub format: InputFormat,
    /// Records without an id get this prefix plus their 1-based position.
    #[arg(long)]
    pub id_prefix: Option<String>,
    /// Organization name to mask while ingesting.
    #[arg(long)]
    pub alias: Vec<String>,
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Kind::User)]
    pub kind: Kind,
    #[arg(long)]
    pub alias: Vec<String>,
    /// One alias per line; blank lines and lines starting with # are skipped.
    #[arg(long)]
    pub aliases_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// User-question corpus.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// Where the user questions and their index come from.
#[derive(Debug, Args)]
pub struct UsersOpts {
    #[arg(long)]
    pub users: PathBuf,
    /// Prebuilt index; built from --users when absent.
    #[arg(long)]
    pub index: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub faqs: PathBuf,
    #[command(flatten)]
    pub users: UsersOpts,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[command(flatten)]
    pub bm25: Bm25Opts,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Event log; created when missing.
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Static files served for every non-API path.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 900)]
    pub lease_secs: u64,
}

#[derive(Debug, Args)]
pub struct CreateBatchArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub faqs: PathBuf,
    #[arg(long)]
    pub users: PathBuf,
    /// Output of `retrieve` or `rerank`.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Judgments required per pair.
    #[arg(long, default_value_t = 3)]
    pub raters: u32,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Judgment records: annotator, label, candidate_id and either task_id
    /// or faq_id; optional rewrite.
    #[arg(long)]
    pub input: PathBuf,
    /// Only resolve faq_id against tasks of this batch.
    #[arg(long)]
    pub batch: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Policy {
    Majority,
    Unanimous,
}

#[derive(Debug, Args)]
pub struct ExportLabelsArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub batch: String,
    #[arg(long, value_enum, default_value_t = Policy::Majority)]
    pub policy: Policy,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write annotator rewrites.
    #[arg(long)]
    pub rewrites: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    #[arg(long, requires = "batch", conflicts_with = "input")]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub batch: Option<String>,
    /// Category counts per item.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProgressArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub batch: String,
}

#[derive(Debug, Args)]
pub struct TrainRankerArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub faqs: PathBuf,
    #[command(flatten)]
    pub users: UsersOpts,
    /// Rewrites exported with the labels; added as extra training pairs.
    #[arg(long)]
    pub rewrites: Option<PathBuf>,
    #[command(flatten)]
    pub bm25: Bm25Opts,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RerankArgs {
    #[arg(long)]
    pub faqs: PathBuf,
    #[command(flatten)]
    pub users: UsersOpts,
    /// Classifier written by `train-ranker`.
    #[arg(long, conflicts_with = "service")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub service: ServiceOpts,
    #[command(flatten)]
    pub bm25: Bm25Opts,
    #[arg(long, default_value_t = 1000)]
    pub pool: usize,
    #[arg(long, default_value_t = 3)]
    pub top: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Output of `rerank`.
    #[arg(long)]
    pub reranked: PathBuf,
    #[arg(long)]
    pub faqs: PathBuf,
    #[arg(long)]
    pub users: PathBuf,
    /// Human labels: matches are added, non-matches removed.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Topics with fewer user questions are dropped.
    #[arg(long, default_value_t = 1)]
    pub min_questions: usize,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Minimum share for a first word to be listed.
    #[arg(long, default_value_t = 0.02)]
    pub threshold: f64,
    /// Per-question scores (`{"id", "score"}` lines) for percent metrics.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// formal, informal, neutral or binary.
    #[arg(long, requires = "scores")]
    pub rule: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReadabilityArgs {
    #[arg(long, conflicts_with = "text", required_unless_present = "text")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RougeArgs {
    #[arg(long, conflicts_with = "input", requires = "reference")]
    pub candidate: Option<String>,
    #[arg(long)]
    pub reference: Vec<String>,
    /// `{"candidate", "references"}` lines; the mean is reported.
    #[arg(long, required_unless_present = "candidate")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrepGenArgs {
    #[arg(long)]
    pub topics: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// A sample file, or a topic file expanded with the command's seed.
#[derive(Debug, Args)]
pub struct SamplesOpts {
    #[arg(long, conflicts_with = "topics", required_unless_present = "topics")]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub topics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: SamplesOpts,
    #[command(flatten)]
    pub split: SplitOpts,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    Baseline,
    External,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: SamplesOpts,
    #[arg(long, value_enum, default_value_t = GeneratorKind::Baseline)]
    pub generator: GeneratorKind,
    #[command(flatten)]
    pub service: ServiceOpts,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[command(flatten)]
    pub split: SplitOpts,
    /// Per-round training files for external systems.
    #[arg(long)]
    pub artifacts_dir: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    /// Source-domain samples.
    #[arg(long)]
    pub source: PathBuf,
    /// Target-domain samples.
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub service: ServiceOpts,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[command(flatten)]
    pub split: SplitOpts,
    #[arg(long)]
    pub artifacts_dir: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}
