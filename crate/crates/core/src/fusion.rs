//! Combining the spatial classifier with a relation prior.
//!
//! Prior predictions are first projected onto a relation vocabulary. A
//! predicted relation missing from the vocabulary hands its score to every
//! vocabulary relation in proportion to the (non-negative) cosine similarity
//! of their phrase vectors, e.g. `score(on) += sim(on, atop) · score(atop)`.
//! The projected prior is then mixed with the classifier output as
//! `(p_ff + λ · p_prior) / (1 + λ)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::embeddings::{cosine_similarity, phrase_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::evaluation::accuracy;
use crate::model::{SpatialModel, Tables};
use crate::prior::{PriorProvider, PriorRecord};
use crate::scores::ScoreDist;
use crate::vocab::RelationVocab;

pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self { lambda: 0.1, lambda_grid: DEFAULT_LAMBDA_GRID.to_vec() }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        validate_grid(&self.lambda_grid)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must be finite and non-negative, got {lambda}")))
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("lambda grid is empty"));
    }
    grid.iter().try_for_each(|l| check_lambda(*l))?;
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("lambda grid must be strictly ascending"));
    }
    Ok(())
}

/// Projects prior records onto a fixed vocabulary, caching the phrase
/// vectors of the vocabulary relations.
pub struct Projector<'a> {
    vocab: Arc<RelationVocab>,
    word: &'a EmbeddingTable,
    phrases: Vec<Vec<f64>>,
}

impl<'a> Projector<'a> {
    pub fn new(vocab: Arc<RelationVocab>, word: &'a EmbeddingTable) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::invalid("projection vocabulary is empty"));
        }
        let phrases = vocab.iter().map(|r| phrase_vector(word, r).vector).collect();
        Ok(Self { vocab, word, phrases })
    }

    pub fn vocab(&self) -> &Arc<RelationVocab> {
        &self.vocab
    }

    /// Normalized distribution over the vocabulary; uniform when no mass lands on it.
    pub fn project(&self, record: &PriorRecord) -> ScoreDist {
        let mut scores = vec![0.0; self.vocab.len()];
        for p in &record.predictions {
            match self.vocab.index_of(&p.relation) {
                Some(i) => scores[i] += p.score,
                None => {
                    let unseen = phrase_vector(self.word, &p.relation);
                    if unseen.oov {
                        continue;
                    }
                    for (s, phrase) in scores.iter_mut().zip(&self.phrases) {
                        let sim = cosine_similarity(phrase, &unseen.vector).expect("same table dim");
                        *s += sim.max(0.0) * p.score;
                    }
                }
            }
        }
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return ScoreDist::uniform(Arc::clone(&self.vocab));
        }
        scores.iter_mut().for_each(|s| *s /= total);
        ScoreDist { vocab: Arc::clone(&self.vocab), scores, normalized: true }
    }
}

/// One-shot form of [`Projector::project`].
pub fn project_prior(record: &PriorRecord, vocab: Arc<RelationVocab>, word: &EmbeddingTable) -> Result<ScoreDist> {
    Ok(Projector::new(vocab, word)?.project(record))
}

fn check_pair(p_ff: &ScoreDist, p_prior: &ScoreDist) -> Result<()> {
    if !(Arc::ptr_eq(&p_ff.vocab, &p_prior.vocab) || p_ff.vocab == p_prior.vocab) {
        return Err(Error::invalid("cannot fuse distributions over different vocabularies"));
    }
    if p_ff.scores.len() != p_prior.scores.len() {
        return Err(Error::Shape("score vectors differ in length".into()));
    }
    Ok(())
}

/// `p_ff + λ · p_prior`, componentwise.
pub fn fuse_raw(p_ff: &ScoreDist, p_prior: &ScoreDist, lambda: f64) -> Result<Vec<f64>> {
    check_pair(p_ff, p_prior)?;
    check_lambda(lambda)?;
    Ok(p_ff.scores.iter().zip(&p_prior.scores).map(|(f, p)| f + lambda * p).collect())
}

/// `(p_ff + λ · p_prior) / (1 + λ)`; same argmax and ranking as the raw sum.
pub fn fuse(p_ff: &ScoreDist, p_prior: &ScoreDist, lambda: f64) -> Result<ScoreDist> {
    if !p_ff.normalized || !p_prior.normalized {
        return Err(Error::invalid("fusion inputs must be normalized"));
    }
    let raw = fuse_raw(p_ff, p_prior, lambda)?;
    let z = 1.0 + lambda;
    Ok(ScoreDist { vocab: Arc::clone(&p_ff.vocab), scores: raw.into_iter().map(|s| s / z).collect(), normalized: true })
}

/// Classifier and projected-prior distributions for a dataset, aligned on
/// one vocabulary, so fused predictions at many λ reuse the same queries.
#[derive(Debug, Clone)]
pub struct FusionInputs {
    pub ff: Vec<ScoreDist>,
    pub prior: Vec<ScoreDist>,
    pub golds: Vec<String>,
}

impl FusionInputs {
    /// Runs the model and the provider over `data`. The model vocabulary must
    /// be a subset of the projector vocabulary.
    pub fn prepare(
        model: &SpatialModel,
        provider: &dyn PriorProvider,
        projector: &Projector<'_>,
        data: &Dataset,
        tables: Tables<'_>,
    ) -> Result<Self> {
        let pairs: Vec<(ScoreDist, ScoreDist)> = data
            .triples()
            .par_iter()
            .map(|t| {
                let ff = model.predict(t, tables)?.lift(projector.vocab())?;
                let record = provider.query(&t.subject.text, &t.object.text)?;
                Ok((ff, projector.project(&record)))
            })
            .collect::<Result<_>>()?;
        let (ff, prior) = pairs.into_iter().unzip();
        Ok(Self { ff, prior, golds: data.golds() })
    }

    pub fn fused(&self, lambda: f64) -> Result<Vec<ScoreDist>> {
        self.ff.iter().zip(&self.prior).map(|(f, p)| fuse(f, p, lambda)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: Vec<f64>,
    pub dev_accuracy: Vec<f64>,
    pub best_lambda: f64,
}

/// Dev accuracy of the fused predictor at each grid value; the best λ (ties
/// → smallest) is returned with the curve.
pub fn sweep_inputs(inputs: &FusionInputs, grid: &[f64]) -> Result<SweepReport> {
    validate_grid(grid)?;
    let dev_accuracy =
        grid.iter().map(|&l| accuracy(&inputs.fused(l)?, &inputs.golds)).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, a) in dev_accuracy.iter().enumerate() {
        if *a > dev_accuracy[best] {
            best = i;
        }
    }
    Ok(SweepReport { grid: grid.to_vec(), best_lambda: grid[best], dev_accuracy })
}

pub fn sweep_lambda(
    model: &SpatialModel,
    provider: &dyn PriorProvider,
    projector: &Projector<'_>,
    dev: &Dataset,
    grid: &[f64],
    tables: Tables<'_>,
) -> Result<SweepReport> {
    validate_grid(grid)?;
    let inputs = FusionInputs::prepare(model, provider, projector, dev, tables)?;
    sweep_inputs(&inputs, grid)
}
