//! Command-line front end.
//!
//! Settings come from an optional flat TOML file (`--config`) with flags
//! layered on top. Every JSON artifact carries the seed, the SHA-256 of the
//! effective configuration and the configuration itself.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{
    classify_relations, generate_synthetic, load_lexicon, load_triples, majority_baseline, standard_split,
    zero_shot_split, BoundingBox, Category, Dataset, Entity, RelationScheme, SplitMode, SynthConfig, Triple,
};
use crate::embeddings::{load_embeddings, EmbeddingKind, EmbeddingTable};
use crate::error::Error;
use crate::evaluation::{
    accuracy, run_generalization, run_matrix, ExperimentConfig, ExperimentReport, ModelKind, Resources,
};
use crate::fusion::{fuse, sweep_lambda, FusionConfig, Projector};
use crate::model::{train, SpatialModel, Tables, TrainConfig};
use crate::prior::{
    load_prior_file, write_prior_file, CooccurrencePrior, PriorProvider, RemoteConfig, RemotePrior, DEFAULT_SMOOTHING,
    DEFAULT_TOP_K,
};
use crate::scores::RankedRelation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CategoryFilter {
    All,
    Explicit,
    Implicit,
}

/// Where relation priors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PriorSource {
    None,
    /// Precomputed JSONL records (`prior_file`).
    File,
    /// Co-occurrence model fitted on the whole loaded corpus.
    Cooc,
    /// HTTP scoring service (`prior_endpoint`).
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Effective configuration of a run. Flat so it maps onto a key/value file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub category: CategoryFilter,
    pub word_embeddings: Option<PathBuf>,
    pub visual_embeddings: Option<PathBuf>,
    pub word_dim: Option<usize>,
    pub visual_dim: Option<usize>,

    pub prior: PriorSource,
    pub prior_file: Option<PathBuf>,
    pub prior_endpoint: Option<String>,
    pub top_k: usize,
    pub smoothing: f64,

    pub seed: u64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub hidden: usize,
    pub with_image: bool,

    pub lambda: f64,
    pub lambda_grid: Vec<f64>,

    pub mode: SplitMode,
    pub ratios: Vec<f64>,
    pub test_pair_fraction: f64,
    pub dev_fraction: f64,

    pub fractions: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub modes: Vec<SplitMode>,
    pub k: usize,
    pub jobs: usize,
    pub format: ReportFormat,

    pub n: usize,
    pub scheme: RelationScheme,
    pub subjects: usize,
    pub objects: usize,
    pub visual_relations: usize,
    pub cluster_spread: f64,
    pub noise: f64,
    pub text_coupling: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let fusion = FusionConfig::default();
        let experiment = ExperimentConfig::default();
        let synth = SynthConfig::default();
        Self {
            data: None,
            lexicon: None,
            category: CategoryFilter::All,
            word_embeddings: None,
            visual_embeddings: None,
            word_dim: None,
            visual_dim: None,
            prior: PriorSource::None,
            prior_file: None,
            prior_endpoint: None,
            top_k: DEFAULT_TOP_K,
            smoothing: DEFAULT_SMOOTHING,
            seed: 0,
            learning_rate: train.learning_rate,
            batch_size: train.batch_size,
            max_epochs: train.max_epochs,
            patience: train.patience,
            hidden: train.hidden,
            with_image: train.with_image,
            lambda: fusion.lambda,
            lambda_grid: fusion.lambda_grid,
            mode: SplitMode::Standard,
            ratios: experiment.split_ratios.to_vec(),
            test_pair_fraction: experiment.test_pair_fraction,
            dev_fraction: experiment.dev_fraction,
            fractions: vec![0.01, 0.1, 0.25, 0.5, 1.0],
            models: vec![ModelKind::Cooc, ModelKind::Ff, ModelKind::Ffi, ModelKind::FusedCooc],
            modes: SplitMode::ZERO_SHOT.to_vec(),
            k: experiment.k,
            jobs: 1,
            format: ReportFormat::Json,
            n: synth.n,
            scheme: synth.scheme,
            subjects: synth.subjects,
            objects: synth.objects,
            visual_relations: synth.visual_relations,
            cluster_spread: synth.cluster_spread,
            noise: synth.noise,
            text_coupling: synth.text_coupling,
        }
    }
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            hidden: self.hidden,
            with_image: self.with_image,
        }
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig { lambda: self.lambda, lambda_grid: self.lambda_grid.clone() }
    }

    pub fn ratios(&self) -> Result<[f64; 3], CliError> {
        <[f64; 3]>::try_from(self.ratios.as_slice())
            .map_err(|_| CliError::Usage(format!("ratios needs three values, got {}", self.ratios.len())))
    }

    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        Ok(ExperimentConfig {
            train: self.train_config(),
            fusion: self.fusion_config(),
            split_ratios: self.ratios()?,
            split_seed: self.seed,
            subsample_seed: self.seed,
            test_pair_fraction: self.test_pair_fraction,
            dev_fraction: self.dev_fraction,
            smoothing: self.smoothing,
            k: self.k,
            jobs: self.jobs,
        })
    }

    pub fn synth_config(&self) -> SynthConfig {
        let defaults = SynthConfig::default();
        SynthConfig {
            n: self.n,
            scheme: self.scheme,
            subjects: self.subjects,
            objects: self.objects,
            word_dim: self.word_dim.unwrap_or(defaults.word_dim),
            visual_dim: self.visual_dim.unwrap_or(defaults.visual_dim),
            visual_relations: self.visual_relations,
            cluster_spread: self.cluster_spread,
            noise: self.noise,
            text_coupling: self.text_coupling,
            seed: self.seed,
        }
    }
}

/// Flag overrides. Only flags given on the command line are layered over
/// the file configuration.
#[derive(Debug, Default, Args, Serialize)]
pub struct Overrides {
    /// Triple file (JSONL)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    /// Explicit-relation lexicon, one relation per line
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    category: Option<CategoryFilter>,
    /// Word embeddings (GloVe text format)
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    word_embeddings: Option<PathBuf>,
    /// Visual embeddings keyed by visual key
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    visual_embeddings: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    word_dim: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    visual_dim: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prior: Option<PriorSource>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prior_file: Option<PathBuf>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    prior_endpoint: Option<String>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    smoothing: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    batch_size: Option<usize>,
    #[arg(long, global = true, alias = "epochs")]
    #[serde(skip_serializing_if = "Option::is_none")]
    max_epochs: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    patience: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    hidden: Option<usize>,
    /// Use visual features (`train`, `sweep`)
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    with_image: Option<bool>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_grid: Option<Vec<f64>>,
    /// standard, unseen_subject_relation, unseen_object_relation or unseen_relation
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<SplitMode>,
    /// Train, dev and test ratios, e.g. 0.70,0.15,0.15
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    ratios: Option<Vec<f64>>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    test_pair_fraction: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    dev_fraction: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    fractions: Option<Vec<f64>>,
    /// Any of prior, cooc, ff, ffi, fused, fused-cooc
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    models: Option<Vec<ModelKind>>,
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    modes: Option<Vec<SplitMode>>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    format: Option<ReportFormat>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// geometric, visual or mixed
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<RelationScheme>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    subjects: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    objects: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    visual_relations: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    cluster_spread: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    text_coupling: Option<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "spatial-relation", version, about = "Spatial relation prediction with language-model priors")]
pub struct Cli {
    /// Flat key/value (TOML) configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,
    /// Output path (a directory for `synth`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a standard or zero-shot split manifest
    Split,
    /// Generate synthetic triples and embeddings into the --out directory
    Synth,
    /// Train a classifier and write its checkpoint to --out
    Train,
    /// Rank relations for a single (subject, object) pair
    Predict(PredictArgs),
    /// Most frequent relation and its accuracy
    Baseline,
    /// Dev accuracy of the fused model over the lambda grid
    Sweep(ModelArg),
    /// Training fraction × model accuracy matrix
    Matrix,
    /// Zero-shot evaluation on unseen subject, object and relation splits
    Generalize,
    /// Prior file utilities
    Priors {
        #[command(subcommand)]
        action: PriorsCommand,
    },
}

#[derive(Debug, Subcommand)]
enum PriorsCommand {
    /// Write co-occurrence predictions for every (subject, object) pair in --data
    Export,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model checkpoint written by `train`
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    subject: String,
    #[arg(long)]
    object: String,
    /// cx,cy,hw,hh in [0, 1]
    #[arg(long, value_parser = parse_box)]
    subject_box: [f64; 4],
    #[arg(long, value_parser = parse_box)]
    object_box: [f64; 4],
    /// Visual-table key (defaults to the last word of the text)
    #[arg(long)]
    subject_vis: Option<String>,
    #[arg(long)]
    object_vis: Option<String>,
    /// Number of ranked relations to print
    #[arg(long, default_value_t = 5)]
    show: usize,
}

fn parse_box(s: &str) -> std::result::Result<[f64; 4], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    values.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a RunConfig,
    result: T,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// File values with flag overrides applied.
pub fn effective_config(file: Option<&Path>, overrides: &impl Serialize) -> CliResult<RunConfig> {
    let base = match file {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| Error::invalid(format!("config {}: {}", path.display(), e.message())))?
        }
        None => RunConfig::default(),
    };
    let mut merged = serde_json::to_value(&base).map_err(Error::from)?;
    let layer = serde_json::to_value(overrides).map_err(Error::from)?;
    if let (Some(m), Some(l)) = (merged.as_object_mut(), layer.as_object()) {
        for (k, v) in l {
            m.insert(k.clone(), v.clone());
        }
    }
    Ok(serde_json::from_value(merged).map_err(Error::from)?)
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let config = effective_config(cli.config.as_deref(), &cli.overrides)?;
    if cli.dump_config {
        let text = toml::to_string(&config).map_err(|e| Error::invalid(e.to_string()))?;
        print!("{text}");
        return Ok(());
    }
    let ctx = Context { config, out: cli.out };
    match cli.command {
        Command::Split => ctx.split(),
        Command::Synth => ctx.synth(),
        Command::Train => ctx.train(),
        Command::Predict(args) => ctx.predict(args),
        Command::Baseline => ctx.baseline(),
        Command::Sweep(args) => ctx.sweep(args),
        Command::Matrix => ctx.experiment(false),
        Command::Generalize => ctx.experiment(true),
        Command::Priors { action: PriorsCommand::Export } => ctx.export_priors(),
    }
}

fn require<'a, T: ?Sized>(value: Option<&'a T>, flag: &str) -> CliResult<&'a T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

struct Context {
    config: RunConfig,
    out: Option<PathBuf>,
}

struct Loaded {
    word: EmbeddingTable,
    visual: Option<EmbeddingTable>,
}

impl Loaded {
    fn tables(&self) -> Tables<'_> {
        Tables::new(&self.word, self.visual.as_ref())
    }
}

impl Context {
    fn envelope<T: Serialize>(&self, command: &str, result: T) -> CliResult<String> {
        let env =
            Envelope { command, seed: self.config.seed, config_hash: self.config.hash(), config: &self.config, result };
        let mut text = serde_json::to_string_pretty(&env).map_err(Error::from)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes to `--out` when given, stdout otherwise.
    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.out {
            Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e).into()),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Error::io("<stdout>", e).into())
            }
        }
    }

    fn print(&self, text: &str) -> CliResult<()> {
        print!("{text}");
        Ok(())
    }

    fn dataset(&self) -> CliResult<Dataset> {
        let path = require(self.config.data.as_deref(), "data")?;
        let data = load_triples(path)?;
        let data = match (&self.config.lexicon, self.config.category) {
            (_, CategoryFilter::All) => data,
            (Some(lexicon), c) => {
                let (explicit, implicit) = classify_relations(&data, &load_lexicon(lexicon)?)?;
                if c == CategoryFilter::Explicit {
                    explicit
                } else {
                    implicit
                }
            }
            (None, c) => {
                let keep = if c == CategoryFilter::Explicit { Category::Explicit } else { Category::Implicit };
                data.iter().filter(|t| t.category == keep).cloned().collect()
            }
        };
        if data.is_empty() {
            return Err(Error::invalid("no triples left after category filtering").into());
        }
        Ok(data)
    }

    fn setting(&self) -> &'static str {
        match self.config.category {
            CategoryFilter::All => "all",
            CategoryFilter::Explicit => "explicit",
            CategoryFilter::Implicit => "implicit",
        }
    }

    fn embeddings(&self) -> CliResult<Loaded> {
        let path = require(self.config.word_embeddings.as_deref(), "word-embeddings")?;
        let (word, _) = load_embeddings(path, self.config.word_dim, EmbeddingKind::Word)?;
        let visual = match &self.config.visual_embeddings {
            Some(p) => Some(load_embeddings(p, self.config.visual_dim, EmbeddingKind::Visual)?.0),
            None => None,
        };
        Ok(Loaded { word, visual })
    }

    fn provider(&self, data: Option<&Dataset>) -> CliResult<Option<Box<dyn PriorProvider>>> {
        let c = &self.config;
        Ok(match c.prior {
            PriorSource::None => None,
            PriorSource::File => {
                let path = require(c.prior_file.as_deref(), "prior-file")?;
                Some(Box::new(load_prior_file(path, c.top_k)?))
            }
            PriorSource::Cooc => {
                let data = require(data, "data")?;
                Some(Box::new(CooccurrencePrior::fit(data, c.smoothing)?.with_top_k(c.top_k)))
            }
            PriorSource::Remote => {
                let endpoint = require(c.prior_endpoint.as_deref(), "prior-endpoint")?;
                let mut remote = RemoteConfig::new(endpoint);
                remote.top_k = c.top_k;
                Some(Box::new(RemotePrior::new(remote)?))
            }
        })
    }

    fn split(&self) -> CliResult<()> {
        let data = self.dataset()?;
        let c = &self.config;
        let bundle = match c.mode {
            SplitMode::Standard => standard_split(&data, c.ratios()?, c.seed)?,
            mode => zero_shot_split(&data, mode, c.test_pair_fraction, c.dev_fraction, c.seed)?,
        };
        self.emit(&self.envelope("split", bundle.manifest())?)
    }

    fn synth(&self) -> CliResult<()> {
        let dir = require(self.out.as_deref(), "out")?;
        let output = generate_synthetic(&self.config.synth_config())?;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        output.dataset.save(dir.join("triples.jsonl"))?;
        output.word.save(dir.join("word.txt"))?;
        output.visual.save(dir.join("visual.txt"))?;
        let summary = serde_json::json!({
            "n": output.dataset.len(),
            "relations": output.dataset.relation_vocab(),
            "fingerprint": output.dataset.fingerprint(),
            "files": ["triples.jsonl", "word.txt", "visual.txt"],
        });
        let text = self.envelope("synth", summary)?;
        fs::write(dir.join("synth.json"), &text).map_err(|e| Error::io(dir.join("synth.json"), e))?;
        self.print(&text)
    }

    fn train(&self) -> CliResult<()> {
        let out = require(self.out.as_deref(), "out")?;
        let data = self.dataset()?;
        let loaded = self.embeddings()?;
        let split = standard_split(&data, self.config.ratios()?, self.config.seed)?;
        let outcome = train(&split.train, &split.dev, loaded.tables(), &self.config.train_config())?;
        let test_preds = outcome.model.predict_all(split.test.triples(), loaded.tables())?;
        let test_accuracy = accuracy(&test_preds, &split.test.golds())?;

        let mut checkpoint: serde_json::Value = serde_json::from_str(&outcome.model.to_json()?).map_err(Error::from)?;
        checkpoint["provenance"] = serde_json::json!({
            "seed": self.config.seed,
            "config_hash": self.config.hash(),
            "data_fingerprint": data.fingerprint(),
        });
        let text = serde_json::to_string(&checkpoint).map_err(Error::from)?;
        fs::write(out, text).map_err(|e| Error::io(out, e))?;

        let summary = serde_json::json!({
            "model": out,
            "best_epoch": outcome.best_epoch,
            "history": outcome.history,
            "test_accuracy": test_accuracy,
            "sizes": [split.train.len(), split.dev.len(), split.test.len()],
        });
        self.print(&self.envelope("train", summary)?)
    }

    fn predict(&self, args: PredictArgs) -> CliResult<()> {
        let model = SpatialModel::load(&args.model.model)?;
        let loaded = self.embeddings()?;
        let bbox = |[cx, cy, hw, hh]: [f64; 4]| BoundingBox::new(cx, cy, hw, hh);
        let subject = Entity::new(&args.subject, bbox(args.subject_box)?, args.subject_vis)?;
        let object = Entity::new(&args.object, bbox(args.object_box)?, args.object_vis)?;
        let triple =
            Triple { image_id: "cli".into(), subject, relation: String::new(), object, category: Category::Implicit };
        let ff = model.predict(&triple, loaded.tables())?;
        let data = match self.config.prior {
            PriorSource::Cooc => Some(self.dataset()?),
            _ => None,
        };
        let (prior, fused) = match self.provider(data.as_ref())? {
            Some(provider) => {
                let projector = Projector::new(Arc::clone(&model.vocab), &loaded.word)?;
                let record = provider.query(&args.subject, &args.object)?;
                let p = projector.project(&record);
                let f = fuse(&ff, &p, self.config.lambda)?;
                (Some(p.ranked(args.show)), Some(f.ranked(args.show)))
            }
            None => (None, None),
        };
        #[derive(Serialize)]
        struct Ranking {
            ff: Vec<RankedRelation>,
            prior: Option<Vec<RankedRelation>>,
            fused: Option<Vec<RankedRelation>>,
            lambda: f64,
        }
        let result = Ranking { ff: ff.ranked(args.show), prior, fused, lambda: self.config.lambda };
        self.emit(&self.envelope("predict", result)?)
    }

    fn baseline(&self) -> CliResult<()> {
        let data = self.dataset()?;
        self.emit(&self.envelope("baseline", majority_baseline(&data)?)?)
    }

    fn sweep(&self, args: ModelArg) -> CliResult<()> {
        let model = SpatialModel::load(&args.model)?;
        let data = self.dataset()?;
        let loaded = self.embeddings()?;
        let provider = self
            .provider(Some(&data))?
            .ok_or_else(|| CliError::Usage("sweep needs --prior file, cooc or remote".into()))?;
        let split = standard_split(&data, self.config.ratios()?, self.config.seed)?;
        let vocab = Arc::new(model.vocab.union(data.relation_vocab()));
        let projector = Projector::new(vocab, &loaded.word)?;
        let report =
            sweep_lambda(&model, provider.as_ref(), &projector, &split.dev, &self.config.lambda_grid, loaded.tables())?;
        self.emit(&self.envelope("sweep", report)?)
    }

    fn experiment(&self, generalize: bool) -> CliResult<()> {
        let data = self.dataset()?;
        let loaded = self.embeddings()?;
        let provider = self.provider(Some(&data))?;
        let res = Resources { tables: loaded.tables(), prior: provider.as_deref() };
        let config = self.config.experiment_config()?;
        let c = &self.config;
        let mut report: ExperimentReport = if generalize {
            run_generalization(&data, self.setting(), &c.modes, &c.models, &config, res)?
        } else {
            run_matrix(&data, self.setting(), &c.fractions, &c.models, &config, res)?
        };
        report.metadata.config_hash = Some(c.hash());
        for f in &report.failures {
            log::warn!("{} / {} / {}: {}", f.setting, f.model, f.fraction, f.error);
        }
        let command = if generalize { "generalize" } else { "matrix" };
        match c.format {
            ReportFormat::Json => self.emit(&self.envelope(command, &report)?),
            ReportFormat::Csv => {
                // CSV has no room for provenance, so it goes to a sidecar.
                if let Some(out) = &self.out {
                    let mut sidecar = out.clone().into_os_string();
                    sidecar.push(".meta.json");
                    let sidecar = PathBuf::from(sidecar);
                    fs::write(&sidecar, self.envelope(command, &report)?).map_err(|e| Error::io(&sidecar, e))?;
                }
                self.emit(&report.to_csv())
            }
        }
    }

    fn export_priors(&self) -> CliResult<()> {
        let out = require(self.out.as_deref(), "out")?;
        let data = self.dataset()?;
        let prior = CooccurrencePrior::fit(&data, self.config.smoothing)?.with_top_k(self.config.top_k);
        let mut seen = std::collections::HashSet::new();
        let mut records = Vec::new();
        for t in &data {
            let key = (t.subject.key(), t.object.key());
            if seen.insert(key.clone()) {
                records.push(prior.query(&key.0, &key.1)?);
            }
        }
        write_prior_file(out, &records)?;
        let summary = serde_json::json!({ "pairs": records.len(), "path": out });
        self.print(&self.envelope("priors export", summary)?)
    }
}
