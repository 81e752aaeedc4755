//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spatial_relation::embeddings::{EmbeddingKind, EmbeddingTable};
use spatial_relation::prior::{Prediction, PriorRecord};
use spatial_relation::vocab::RelationVocab;

/// Straightforward re-statement of prior projection, written against plain
/// maps so it shares no code with the library: in-vocabulary predictions
/// keep their score, every other phrase with at least one known token
/// spreads `max(0, cos) · score` over all vocabulary relations, and the
/// result is normalized (uniform if nothing landed).
pub fn oracle_project(
    vocab: &[String],
    tokens: &HashMap<String, Vec<f64>>,
    dim: usize,
    record: &PriorRecord,
) -> Vec<f64> {
    let phrase = |text: &str| -> Option<Vec<f64>> {
        let found: Vec<&Vec<f64>> = text.split_whitespace().filter_map(|t| tokens.get(&t.to_lowercase())).collect();
        if found.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; dim];
        for v in &found {
            for k in 0..dim {
                mean[k] += v[k];
            }
        }
        Some(mean.into_iter().map(|x| x / found.len() as f64).collect())
    };
    let cos = |a: &[f64], b: &[f64]| -> f64 {
        let dot: f64 = (0..dim).map(|k| a[k] * b[k]).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let mut out = vec![0.0; vocab.len()];
    for p in &record.predictions {
        if let Some(i) = vocab.iter().position(|r| *r == p.relation) {
            out[i] += p.score;
            continue;
        }
        let Some(u) = phrase(&p.relation) else { continue };
        for (i, r) in vocab.iter().enumerate() {
            let v = phrase(r).unwrap_or_else(|| vec![0.0; dim]);
            out[i] += cos(&v, &u).max(0.0) * p.score;
        }
    }
    let total: f64 = out.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / vocab.len() as f64; vocab.len()];
    }
    out.into_iter().map(|x| x / total).collect()
}

/// A random projection problem: vocabulary, word table, a record mixing
/// in-vocabulary, similar, multi-word and unknown relations.
pub struct ProjectionCase {
    pub vocab: Arc<RelationVocab>,
    pub names: Vec<String>,
    pub tokens: HashMap<String, Vec<f64>>,
    pub table: EmbeddingTable,
    pub record: PriorRecord,
}

pub fn random_projection_case(rng: &mut ChaCha8Rng, max_vocab: usize) -> ProjectionCase {
    let dim = rng.random_range(2..=6);
    let pool: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
    let mut tokens = HashMap::new();
    let mut table = EmbeddingTable::new(dim, EmbeddingKind::Word).unwrap();
    for w in &pool {
        // About a fifth of the pool stays unknown.
        if rng.random_bool(0.8) {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            table.insert(w.clone(), v.clone()).unwrap();
            tokens.insert(w.clone(), v);
        }
    }
    let phrase = |rng: &mut ChaCha8Rng| -> String {
        let words = rng.random_range(1..=3);
        (0..words).map(|_| pool.choose(rng).unwrap().clone()).collect::<Vec<_>>().join(" ")
    };
    let n_vocab = rng.random_range(1..=max_vocab);
    let mut vocab = RelationVocab::new();
    while vocab.len() < n_vocab {
        vocab.push(phrase(rng));
    }
    let names: Vec<String> = vocab.names().to_vec();

    let n_preds = rng.random_range(0..=20);
    let mut relations: Vec<String> = Vec::new();
    while relations.len() < n_preds {
        let r = if rng.random_bool(0.4) { names.choose(rng).unwrap().clone() } else { phrase(rng) };
        if !relations.contains(&r) {
            relations.push(r);
        }
    }
    let mut scores: Vec<f64> =
        relations.iter().map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..1.0) }).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let record = PriorRecord {
        subject: "s".into(),
        object: "o".into(),
        predictions: relations
            .into_iter()
            .zip(scores)
            .map(|(relation, score)| Prediction { relation, score })
            .collect(),
    };
    ProjectionCase { vocab: Arc::new(vocab), names, tokens, table, record }
}
