use std::sync::Arc;

use log::debug;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_features, init_params, FeatureVector, ModelParams, SpatialModel, Tables};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::vocab::RelationVocab;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without dev-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub hidden: usize,
    pub with_image: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 256,
            max_epochs: 50,
            patience: 5,
            seed: 0,
            hidden: 128,
            with_image: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 || self.hidden == 0 {
            return Err(Error::invalid("batch size, epochs, patience and hidden size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training cross-entropy over the epoch's batches.
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best dev accuracy.
    pub model: SpatialModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

fn dev_accuracy(params: &ModelParams, dev: &[(FeatureVector, Option<usize>)]) -> Result<f64> {
    let mut correct = 0usize;
    for (x, gold) in dev {
        let p = params.forward(x)?;
        let mut best = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = i;
            }
        }
        correct += usize::from(*gold == Some(best));
    }
    Ok(correct as f64 / dev.len() as f64)
}

/// Mini-batch gradient descent on mean cross-entropy with dev-accuracy model
/// selection and early stopping. Deterministic for a fixed config.
pub fn train(train: &Dataset, dev: &Dataset, tables: Tables<'_>, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::invalid("training and dev sets must be non-empty"));
    }
    let vocab = Arc::new(RelationVocab::from_names(train.relation_vocab().iter()));
    let in_dim = tables.input_dim(config.with_image)?;

    let examples: Vec<(FeatureVector, usize)> = train
        .iter()
        .map(|t| {
            let gold = vocab.index_of(&t.relation).expect("train vocabulary");
            build_features(t, tables, config.with_image).map(|x| (x, gold))
        })
        .collect::<Result<_>>()?;
    let dev_examples: Vec<(FeatureVector, Option<usize>)> = dev
        .iter()
        .map(|t| build_features(t, tables, config.with_image).map(|x| (x, vocab.index_of(&t.relation))))
        .collect::<Result<_>>()?;

    let mut params = init_params(in_dim, config.hidden, vocab.len(), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..examples.len()).collect();

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&FeatureVector, usize)> = chunk.iter().map(|&i| (&examples[i].0, examples[i].1)).collect();
            let (loss, grads) = params.loss_and_grads(&batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            params.add_scaled(&grads, -config.learning_rate);
            loss_sum += loss * chunk.len() as f64;
        }
        if params.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
        let acc = dev_accuracy(&params, &dev_examples)?;
        let train_loss = loss_sum / examples.len() as f64;
        debug!("epoch {epoch}: loss {train_loss:.5} dev accuracy {acc:.4}");
        history.push(EpochRecord { epoch, train_loss, dev_accuracy: acc });
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            best = Some((acc, epoch, params.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        model: SpatialModel { params, vocab, with_image: config.with_image, config: config.clone() },
        history,
        best_epoch,
    })
}
