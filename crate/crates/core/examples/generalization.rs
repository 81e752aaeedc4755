//! Zero-shot evaluation: each split holds out (subject, relation),
//! (object, relation) or whole relations, so the classifier cannot name a
//! held-out relation while a prior still can.
//!
//! cargo run --release --example generalization

use spatial_relation::dataset::{generate_synthetic, RelationScheme, SplitMode, SynthConfig};
use spatial_relation::evaluation::{run_generalization, ExperimentConfig, ModelKind, Resources};
use spatial_relation::model::Tables;
use spatial_relation::prior::{CooccurrencePrior, PriorProvider};

fn main() -> spatial_relation::Result<()> {
    let out = generate_synthetic(&SynthConfig {
        n: 3000,
        scheme: RelationScheme::Mixed,
        text_coupling: 0.9,
        seed: 4,
        ..SynthConfig::default()
    })?;
    // A prior fitted on the whole corpus plays the part of an external
    // model that has seen every relation.
    let prior = CooccurrencePrior::fit(&out.dataset, 0.1)?;
    let res =
        Resources { tables: Tables::new(&out.word, Some(&out.visual)), prior: Some(&prior as &dyn PriorProvider) };
    let models = [ModelKind::Prior, ModelKind::Ffi, ModelKind::Fused];
    let report = run_generalization(
        &out.dataset,
        "synthetic",
        &SplitMode::ZERO_SHOT,
        &models,
        &ExperimentConfig::default(),
        res,
    )?;
    println!("{:<42} {:<6} {:>6} {:>8} {:>6}", "setting", "model", "n", "top-1", "top-5");
    for c in &report.cells {
        println!("{:<42} {:<6} {:>6} {:>8.4} {:>6.4}", c.setting, c.model.label(), c.n_test, c.accuracy, c.topk);
    }
    Ok(())
}
