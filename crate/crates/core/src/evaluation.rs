//! Accuracy metrics and the experiment drivers: the training-fraction ×
//! model matrix and the unseen subject / object / relation generalization runs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{standard_split, subsample_fraction, zero_shot_split, Dataset, SplitMode};
use crate::error::{Error, Result};
use crate::fusion::{sweep_inputs, FusionConfig, FusionInputs, Projector};
use crate::model::{train, SpatialModel, Tables, TrainConfig};
use crate::prior::{CooccurrencePrior, PriorProvider, DEFAULT_SMOOTHING};
use crate::scores::ScoreDist;
use crate::vocab::RelationVocab;

fn check_lengths(predictions: &[ScoreDist], golds: &[String]) -> Result<()> {
    if predictions.len() != golds.len() {
        return Err(Error::invalid(format!("{} predictions for {} gold labels", predictions.len(), golds.len())));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("no predictions to score"));
    }
    Ok(())
}

/// Fraction of examples whose argmax (ties → lowest index) equals the gold
/// relation. Golds missing from a prediction's vocabulary count as wrong.
pub fn accuracy(predictions: &[ScoreDist], golds: &[String]) -> Result<f64> {
    check_lengths(predictions, golds)?;
    let correct = predictions.iter().zip(golds).filter(|(p, g)| p.top_relation() == Some(g.as_str())).count();
    Ok(correct as f64 / golds.len() as f64)
}

/// Fraction of examples whose gold is among the `k` best-scored relations
/// (ties at the cut resolved by lowest index).
pub fn topk_accuracy(predictions: &[ScoreDist], golds: &[String], k: usize) -> Result<f64> {
    check_lengths(predictions, golds)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let correct = predictions
        .iter()
        .zip(golds)
        .filter(|(p, g)| match p.vocab.index_of(g) {
            Some(gi) => p.top_k(k).contains(&gi),
            None => false,
        })
        .count();
    Ok(correct as f64 / golds.len() as f64)
}

/// Predictors compared in the experiment reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// The configured external prior (file or remote) on its own.
    #[serde(rename = "prior")]
    Prior,
    /// Co-occurrence prior fitted on the training portion.
    #[serde(rename = "cooc")]
    Cooc,
    #[serde(rename = "ff")]
    Ff,
    #[serde(rename = "ffi")]
    Ffi,
    /// FF+I fused with the external prior, or with the co-occurrence prior
    /// when no external prior is configured.
    #[serde(rename = "fused")]
    Fused,
    #[serde(rename = "fused-cooc")]
    FusedCooc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] =
        [ModelKind::Prior, ModelKind::Cooc, ModelKind::Ff, ModelKind::Ffi, ModelKind::Fused, ModelKind::FusedCooc];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Prior => "prior",
            ModelKind::Cooc => "cooc",
            ModelKind::Ff => "ff",
            ModelKind::Ffi => "ffi",
            ModelKind::Fused => "fused",
            ModelKind::FusedCooc => "fused-cooc",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCell {
    pub setting: String,
    pub model: ModelKind,
    pub fraction: f64,
    /// Dev-selected λ for fused models.
    pub lambda: Option<f64>,
    pub n_test: usize,
    pub accuracy: f64,
    pub topk: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub setting: String,
    pub model: ModelKind,
    pub fraction: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub data_fingerprint: String,
    pub n_data: usize,
    pub config: ExperimentConfig,
    /// Hash of the run configuration that produced the report, when known.
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub cells: Vec<ExperimentCell>,
    pub failures: Vec<CellFailure>,
    pub metadata: ReportMetadata,
}

pub const CSV_HEADER: &str = "setting,model,fraction,lambda,n_test,accuracy,topk,k";

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let lambda = c.lambda.map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.setting, c.model, c.fraction, lambda, c.n_test, c.accuracy, c.topk, c.k
            ));
        }
        out
    }

    pub fn cell(&self, setting: &str, model: ModelKind, fraction: f64) -> Option<&ExperimentCell> {
        self.cells.iter().find(|c| c.setting == setting && c.model == model && c.fraction == fraction)
    }
}

/// Knobs shared by the experiment drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub fusion: FusionConfig,
    pub split_ratios: [f64; 3],
    pub split_seed: u64,
    pub subsample_seed: u64,
    pub test_pair_fraction: f64,
    pub dev_fraction: f64,
    pub smoothing: f64,
    pub k: usize,
    /// Cells evaluated concurrently; each cell trains single-threaded.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            fusion: FusionConfig::default(),
            split_ratios: [0.70, 0.15, 0.15],
            split_seed: 0,
            subsample_seed: 0,
            test_pair_fraction: 0.15,
            dev_fraction: 0.15,
            smoothing: DEFAULT_SMOOTHING,
            k: 5,
            jobs: 1,
        }
    }
}

/// Embedding tables and the optional external prior used by the drivers.
#[derive(Clone, Copy)]
pub struct Resources<'a> {
    pub tables: Tables<'a>,
    pub prior: Option<&'a dyn PriorProvider>,
}

struct Parts<'d> {
    setting: String,
    fraction: f64,
    train: Dataset,
    dev: &'d Dataset,
    test: &'d Dataset,
    /// Vocabulary priors are projected onto and fused predictions range over.
    eval_vocab: Arc<RelationVocab>,
}

type CellResult = std::result::Result<ExperimentCell, CellFailure>;

fn model_ref(m: &Option<Result<SpatialModel>>) -> Result<&SpatialModel> {
    match m {
        Some(Ok(model)) => Ok(model),
        Some(Err(e)) => Err(Error::invalid(format!("training failed: {e}"))),
        None => unreachable!("model trained on demand"),
    }
}

fn score_cell(
    parts: &Parts<'_>,
    model: ModelKind,
    lambda: Option<f64>,
    preds: &[ScoreDist],
    k: usize,
) -> Result<ExperimentCell> {
    let golds = parts.test.golds();
    Ok(ExperimentCell {
        setting: parts.setting.clone(),
        model,
        fraction: parts.fraction,
        lambda,
        n_test: parts.test.len(),
        accuracy: accuracy(preds, &golds)?,
        topk: topk_accuracy(preds, &golds, k)?,
        k,
    })
}

fn evaluate_parts(
    parts: &Parts<'_>,
    models: &[ModelKind],
    config: &ExperimentConfig,
    res: Resources<'_>,
) -> Vec<CellResult> {
    let tables = res.tables;
    let projector = Projector::new(Arc::clone(&parts.eval_vocab), tables.word);
    let train_with = |with_image: bool| -> Result<SpatialModel> {
        let cfg = TrainConfig { with_image, ..config.train.clone() };
        Ok(train(&parts.train, parts.dev, tables, &cfg)?.model)
    };
    let needs = |kinds: &[ModelKind]| models.iter().any(|m| kinds.contains(m));
    let ff = needs(&[ModelKind::Ff]).then(|| train_with(false));
    let ffi = needs(&[ModelKind::Ffi, ModelKind::Fused, ModelKind::FusedCooc]).then(|| train_with(true));
    let cooc =
        needs(&[ModelKind::Cooc, ModelKind::FusedCooc]).then(|| CooccurrencePrior::fit(&parts.train, config.smoothing));
    let cooc_fallback;
    let external: Option<&dyn PriorProvider> = match (res.prior, needs(&[ModelKind::Fused])) {
        (Some(p), _) => Some(p),
        (None, true) => {
            cooc_fallback = CooccurrencePrior::fit(&parts.train, config.smoothing);
            cooc_fallback.as_ref().ok().map(|c| c as &dyn PriorProvider)
        }
        (None, false) => None,
    };

    let prior_only = |provider: &dyn PriorProvider| -> Result<Vec<ScoreDist>> {
        let projector = projector.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        parts
            .test
            .triples()
            .par_iter()
            .map(|t| Ok(projector.project(&provider.query(&t.subject.text, &t.object.text)?)))
            .collect()
    };
    let fused = |model: &SpatialModel, provider: &dyn PriorProvider| -> Result<(f64, Vec<ScoreDist>)> {
        let projector = projector.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        let dev_inputs = FusionInputs::prepare(model, provider, projector, parts.dev, tables)?;
        let best = sweep_inputs(&dev_inputs, &config.fusion.lambda_grid)?.best_lambda;
        let test_inputs = FusionInputs::prepare(model, provider, projector, parts.test, tables)?;
        Ok((best, test_inputs.fused(best)?))
    };
    models
        .iter()
        .map(|&kind| {
            let outcome = match kind {
                ModelKind::Prior => res
                    .prior
                    .ok_or_else(|| Error::invalid("no external prior configured"))
                    .and_then(|p| score_cell(parts, kind, None, &prior_only(p)?, config.k)),
                ModelKind::Cooc => match cooc.as_ref().expect("fitted on demand") {
                    Ok(c) => prior_only(c).and_then(|p| score_cell(parts, kind, None, &p, config.k)),
                    Err(e) => Err(Error::invalid(e.to_string())),
                },
                ModelKind::Ff | ModelKind::Ffi => {
                    let m = if kind == ModelKind::Ff { &ff } else { &ffi };
                    model_ref(m)
                        .and_then(|m| m.predict_all(parts.test.triples(), tables))
                        .and_then(|p| score_cell(parts, kind, None, &p, config.k))
                }
                ModelKind::Fused => external
                    .ok_or_else(|| Error::invalid("no prior available for fusion"))
                    .and_then(|p| fused(model_ref(&ffi)?, p))
                    .and_then(|(l, p)| score_cell(parts, kind, Some(l), &p, config.k)),
                ModelKind::FusedCooc => match cooc.as_ref().expect("fitted on demand") {
                    Ok(c) => model_ref(&ffi)
                        .and_then(|m| fused(m, c))
                        .and_then(|(l, p)| score_cell(parts, kind, Some(l), &p, config.k)),
                    Err(e) => Err(Error::invalid(e.to_string())),
                },
            };
            outcome.map_err(|e| CellFailure {
                setting: parts.setting.clone(),
                model: kind,
                fraction: parts.fraction,
                error: e.to_string(),
            })
        })
        .collect()
}

fn validate(config: &ExperimentConfig, models: &[ModelKind]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::invalid("no models requested"));
    }
    if config.k == 0 || config.jobs == 0 {
        return Err(Error::invalid("k and jobs must be positive"));
    }
    config.fusion.validate()
}

fn run_jobs<T, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<Vec<CellResult>>>
where
    T: Sync,
    F: Fn(&T) -> Vec<CellResult> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

fn assemble(results: Vec<Vec<CellResult>>, dataset: &Dataset, config: &ExperimentConfig) -> ExperimentReport {
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(c) => cells.push(c),
            Err(f) => failures.push(f),
        }
    }
    ExperimentReport {
        cells,
        failures,
        metadata: ReportMetadata {
            data_fingerprint: dataset.fingerprint(),
            n_data: dataset.len(),
            config: config.clone(),
            config_hash: None,
        },
    }
}

/// Trains and evaluates every requested model at every training fraction on
/// one fixed standard split.
pub fn run_matrix(
    dataset: &Dataset,
    setting: &str,
    fractions: &[f64],
    models: &[ModelKind],
    config: &ExperimentConfig,
    res: Resources<'_>,
) -> Result<ExperimentReport> {
    validate(config, models)?;
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::invalid("fractions must be a non-empty list in (0, 1]"));
    }
    let split = standard_split(dataset, config.split_ratios, config.split_seed)?;
    let eval_vocab = Arc::new(dataset.relation_vocab().clone());
    let results = run_jobs(config.jobs, fractions, |&fraction| {
        info!("{setting}: fraction {fraction}");
        let train = match subsample_fraction(&split.train, fraction, config.subsample_seed) {
            Ok(t) => t,
            Err(e) => {
                return models
                    .iter()
                    .map(|&model| {
                        Err(CellFailure { setting: setting.to_string(), model, fraction, error: e.to_string() })
                    })
                    .collect()
            }
        };
        let parts = Parts {
            setting: setting.to_string(),
            fraction,
            train,
            dev: &split.dev,
            test: &split.test,
            eval_vocab: Arc::clone(&eval_vocab),
        };
        evaluate_parts(&parts, models, config, res)
    })?;
    Ok(assemble(results, dataset, config))
}

/// Evaluates the models on zero-shot splits, one per mode. Cells are
/// labelled `{setting}:{mode}`; priors and fused predictions range over the
/// full dataset vocabulary so held-out relations can be ranked.
pub fn run_generalization(
    dataset: &Dataset,
    setting: &str,
    modes: &[SplitMode],
    models: &[ModelKind],
    config: &ExperimentConfig,
    res: Resources<'_>,
) -> Result<ExperimentReport> {
    validate(config, models)?;
    if modes.is_empty() || modes.contains(&SplitMode::Standard) {
        return Err(Error::invalid("generalization needs one or more unseen_* modes"));
    }
    let eval_vocab = Arc::new(dataset.relation_vocab().clone());
    let results = run_jobs(config.jobs, modes, |&mode| {
        let label = format!("{setting}:{mode}");
        info!("{label}");
        let split =
            match zero_shot_split(dataset, mode, config.test_pair_fraction, config.dev_fraction, config.split_seed) {
                Ok(s) => s,
                Err(e) => {
                    return models
                        .iter()
                        .map(|&model| {
                            Err(CellFailure { setting: label.clone(), model, fraction: 1.0, error: e.to_string() })
                        })
                        .collect()
                }
            };
        let parts = Parts {
            setting: label.clone(),
            fraction: 1.0,
            train: split.train.clone(),
            dev: &split.dev,
            test: &split.test,
            eval_vocab: Arc::clone(&eval_vocab),
        };
        evaluate_parts(&parts, models, config, res)
    })?;
    Ok(assemble(results, dataset, config))
}
