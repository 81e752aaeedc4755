use std::collections::HashMap;

use super::{Prediction, PriorProvider, PriorRecord, ProviderKind, DEFAULT_TOP_K};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::vocab::{normalize_relation, RelationVocab};

pub const DEFAULT_SMOOTHING: f64 = 0.1;

/// Smoothed co-occurrence estimate of `score(r | s, o)`.
///
/// ```text
/// score(r | s, o) = (c(s, r, o) + α · B(r | s, o)) / (c(s, ·, o) + α)
/// B(r | s, o)     = (P(r | s) + P(r | o) + P(r)) / 3
/// ```
///
/// where each backoff term is α-smoothed over the training relation
/// vocabulary, e.g. `P(r | s) = (c(s, r) + α) / (c(s) + α |V|)`. Every score
/// lies in (0, 1].
#[derive(Debug, Clone)]
pub struct CooccurrencePrior {
    vocab: RelationVocab,
    alpha: f64,
    top_k: usize,
    pair: HashMap<(String, String), Vec<usize>>,
    by_subject: HashMap<String, Vec<usize>>,
    by_object: HashMap<String, Vec<usize>>,
    relation: Vec<usize>,
    total: usize,
}

fn bump(counts: &mut Vec<usize>, len: usize, r: usize) {
    counts.resize(len, 0);
    counts[r] += 1;
}

fn count(counts: Option<&Vec<usize>>, r: usize) -> f64 {
    counts.and_then(|c| c.get(r)).copied().unwrap_or(0) as f64
}

fn total(counts: Option<&Vec<usize>>) -> f64 {
    counts.map_or(0, |c| c.iter().sum::<usize>()) as f64
}

impl CooccurrencePrior {
    pub fn fit(train: &Dataset, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid(format!("smoothing must be positive, got {alpha}")));
        }
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a co-occurrence prior on an empty dataset"));
        }
        let vocab = train.relation_vocab().clone();
        let v = vocab.len();
        let mut prior = Self {
            vocab,
            alpha,
            top_k: DEFAULT_TOP_K,
            pair: HashMap::new(),
            by_subject: HashMap::new(),
            by_object: HashMap::new(),
            relation: vec![0; v],
            total: 0,
        };
        for t in train {
            let r = prior.vocab.index_of(&t.relation).expect("dataset vocabulary");
            let (s, o) = (t.subject.key(), t.object.key());
            bump(prior.by_subject.entry(s.clone()).or_default(), v, r);
            bump(prior.by_object.entry(o.clone()).or_default(), v, r);
            bump(prior.pair.entry((s, o)).or_default(), v, r);
            prior.relation[r] += 1;
            prior.total += 1;
        }
        Ok(prior)
    }

    pub fn with_top_k(mut self, top_k: usize) -> Self {
        self.top_k = top_k;
        self
    }

    pub fn vocab(&self) -> &RelationVocab {
        &self.vocab
    }

    /// Scores of every training relation for (subject, object), in vocabulary order.
    pub fn scores(&self, subject: &str, object: &str) -> Vec<f64> {
        let (s, o) = (normalize_relation(subject), normalize_relation(object));
        let a = self.alpha;
        let v = self.vocab.len() as f64;
        let pair = self.pair.get(&(s.clone(), o.clone()));
        let subj = self.by_subject.get(&s);
        let obj = self.by_object.get(&o);
        let (n_pair, n_subj, n_obj) = (total(pair), total(subj), total(obj));
        (0..self.vocab.len())
            .map(|r| {
                let p_s = (count(subj, r) + a) / (n_subj + a * v);
                let p_o = (count(obj, r) + a) / (n_obj + a * v);
                let p_r = (self.relation[r] as f64 + a) / (self.total as f64 + a * v);
                let backoff = (p_s + p_o + p_r) / 3.0;
                (count(pair, r) + a * backoff) / (n_pair + a)
            })
            .collect()
    }
}

impl PriorProvider for CooccurrencePrior {
    fn kind(&self) -> ProviderKind {
        ProviderKind::Cooccurrence
    }

    fn top_k(&self) -> usize {
        self.top_k
    }

    fn query(&self, subject: &str, object: &str) -> Result<PriorRecord> {
        let scores = self.scores(subject, object);
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        order.truncate(self.top_k);
        Ok(PriorRecord {
            subject: normalize_relation(subject),
            object: normalize_relation(object),
            predictions: order
                .into_iter()
                .map(|r| Prediction { relation: self.vocab.name(r).to_string(), score: scores[r] })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::triple;

    #[test]
    fn only_observed_relation_wins() {
        let ds: Dataset = (0..3).map(|_| triple("man", "riding", "horse")).collect();
        let prior = CooccurrencePrior::fit(&ds, 0.1).unwrap();
        let r = prior.query("man", "horse").unwrap();
        assert_eq!(r.predictions[0].relation, "riding");
        // A single relation: c = 3, backoff = 1, score = (3 + 0.1) / 3.1.
        assert!((r.predictions[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unseen_pair_backs_off_to_object() {
        let ds = Dataset::new(vec![
            triple("man", "flying", "kite"),
            triple("man", "riding", "horse"),
            triple("woman", "riding", "horse"),
            triple("cup", "on", "table"),
            triple("book", "on", "table"),
        ]);
        let prior = CooccurrencePrior::fit(&ds, 0.1).unwrap();
        let scores = prior.scores("kid", "kite");
        // Hand evaluation, |V| = 3 (flying, riding, on), α = 0.1, no pair or
        // subject counts:
        //   P(r|kid)  = 0.1 / 0.3             = 1/3 for every r
        //   P(r|kite) = (c + 0.1) / 1.3       → flying 1.1/1.3, others 0.1/1.3
        //   P(r)      = (c + 0.1) / 5.3       → flying 1.1/5.3, riding 2.1/5.3, on 2.1/5.3
        //   score     = 0.1 · B / 0.1         = B
        let b = |p_o: f64, p_r: f64| (1.0 / 3.0 + p_o + p_r) / 3.0;
        let expected = [b(1.1 / 1.3, 1.1 / 5.3), b(0.1 / 1.3, 2.1 / 5.3), b(0.1 / 1.3, 2.1 / 5.3)];
        for (s, e) in scores.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
        let r = prior.query("kid", "kite").unwrap();
        assert_eq!(r.predictions[0].relation, "flying");
        assert!(r.validate().is_ok());
    }

    #[test]
    fn bounds_and_top_k() {
        let ds = Dataset::new(vec![
            triple("a", "r1", "b"),
            triple("a", "r2", "c"),
            triple("d", "r3", "b"),
            triple("a", "r1", "b"),
        ]);
        let prior = CooccurrencePrior::fit(&ds, 0.5).unwrap().with_top_k(2);
        for (s, o) in [("a", "b"), ("x", "y"), ("d", "c")] {
            let r = prior.query(s, o).unwrap();
            assert_eq!(r.predictions.len(), 2);
            assert!(r.predictions.iter().all(|p| p.score > 0.0 && p.score <= 1.0));
            r.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_smoothing() {
        let ds: Dataset = (0..3).map(|_| triple("man", "riding", "horse")).collect();
        assert!(CooccurrencePrior::fit(&ds, 0.0).is_err());
        assert!(CooccurrencePrior::fit(&ds, -1.0).is_err());
        assert!(CooccurrencePrior::fit(&Dataset::default(), 0.1).is_err());
    }
}
