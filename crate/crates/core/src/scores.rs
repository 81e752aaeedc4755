use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::RelationVocab;

/// Scores over an ordered relation vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreDist {
    pub vocab: Arc<RelationVocab>,
    pub scores: Vec<f64>,
    /// Set when the scores form a probability distribution.
    pub normalized: bool,
}

/// One entry of a ranked listing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRelation {
    pub relation: String,
    pub score: f64,
}

impl ScoreDist {
    pub fn new(vocab: Arc<RelationVocab>, scores: Vec<f64>, normalized: bool) -> Result<Self> {
        let dist = Self { vocab, scores, normalized };
        dist.validate()?;
        Ok(dist)
    }

    pub fn uniform(vocab: Arc<RelationVocab>) -> Self {
        let n = vocab.len().max(1) as f64;
        let scores = vec![1.0 / n; vocab.len()];
        Self { vocab, scores, normalized: true }
    }

    /// All mass on `relation`, which must be in `vocab`.
    pub fn one_hot(vocab: Arc<RelationVocab>, relation: &str) -> Result<Self> {
        let i = vocab
            .index_of(relation)
            .ok_or_else(|| Error::invalid(format!("relation {relation:?} not in vocabulary")))?;
        let mut scores = vec![0.0; vocab.len()];
        scores[i] = 1.0;
        Ok(Self { vocab, scores, normalized: true })
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.len() != self.vocab.len() {
            return Err(Error::Shape(format!("{} scores for a vocabulary of {}", self.scores.len(), self.vocab.len())));
        }
        if let Some(s) = self.scores.iter().find(|s| !s.is_finite() || **s < 0.0) {
            return Err(Error::invalid(format!("score {s} is negative or non-finite")));
        }
        if self.normalized {
            let total: f64 = self.scores.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!("normalized scores sum to {total}")));
            }
        }
        Ok(())
    }

    /// Index of the highest score; ties go to the lowest index.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.scores.iter().enumerate() {
            if best.is_none_or(|b| *s > self.scores[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn top_relation(&self) -> Option<&str> {
        self.argmax().map(|i| self.vocab.name(i))
    }

    /// Indices of the `k` highest scores, ties broken by lower index.
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.scores.len()).collect();
        order.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        order.truncate(k);
        order
    }

    pub fn ranked(&self, k: usize) -> Vec<RankedRelation> {
        self.top_k(k)
            .into_iter()
            .map(|i| RankedRelation { relation: self.vocab.name(i).to_string(), score: self.scores[i] })
            .collect()
    }

    pub fn score_of(&self, relation: &str) -> Option<f64> {
        self.vocab.index_of(relation).map(|i| self.scores[i])
    }

    /// Re-indexes onto `target`, which must contain every relation of this
    /// vocabulary; relations new to `target` get score zero.
    pub fn lift(&self, target: &Arc<RelationVocab>) -> Result<ScoreDist> {
        if Arc::ptr_eq(&self.vocab, target) || *self.vocab == **target {
            return Ok(self.clone());
        }
        let mut scores = vec![0.0; target.len()];
        for (name, s) in self.vocab.iter().zip(&self.scores) {
            let i = target.index_of(name).ok_or_else(|| Error::invalid(format!("target vocabulary lacks {name:?}")))?;
            scores[i] = *s;
        }
        Ok(ScoreDist { vocab: Arc::clone(target), scores, normalized: self.normalized })
    }
}
