//! Re-scores a language-model prior onto a fixed relation vocabulary.
//! Relations outside the vocabulary pass their score to every vocabulary
//! relation in proportion to (non-negative) embedding similarity.
//!
//! cargo run --example rescore

use std::sync::Arc;

use spatial_relation::embeddings::{EmbeddingKind, EmbeddingTable};
use spatial_relation::fusion::project_prior;
use spatial_relation::prior::{Prediction, PriorRecord};
use spatial_relation::vocab::RelationVocab;

fn record(preds: &[(&str, f64)]) -> PriorRecord {
    PriorRecord {
        subject: "book".into(),
        object: "table".into(),
        predictions: preds.iter().map(|&(r, s)| Prediction { relation: r.into(), score: s }).collect(),
    }
}

fn main() -> spatial_relation::Result<()> {
    let mut word = EmbeddingTable::new(2, EmbeddingKind::Word)?;
    for (w, v) in [("on", [1.0, 0.0]), ("under", [-0.6, 0.8]), ("atop", [0.8, 0.6]), ("beneath", [-0.5, 0.85])] {
        word.insert(w, v.to_vec())?;
    }
    let vocab = Arc::new(RelationVocab::from_names(["on", "under"]));

    let cases = [
        // "atop" is orthogonal to "under", so all its mass lands on "on".
        record(&[("on", 0.6), ("atop", 0.4)]),
        record(&[("atop", 0.5), ("beneath", 0.5)]),
        record(&[("floating near", 0.9)]),
        record(&[]),
    ];
    for r in &cases {
        let dist = project_prior(r, Arc::clone(&vocab), &word)?;
        let input: Vec<String> = r.predictions.iter().map(|p| format!("{}:{}", p.relation, p.score)).collect();
        let output: Vec<String> = dist.ranked(2).iter().map(|x| format!("{}:{:.3}", x.relation, x.score)).collect();
        println!("[{}] -> [{}]", input.join(", "), output.join(", "));
    }
    Ok(())
}
