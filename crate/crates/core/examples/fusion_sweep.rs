//! Trains the classifier on a small slice of data, then picks the fusion
//! weight on dev and reports test accuracy of the classifier, the prior and
//! the fused predictor.
//!
//! cargo run --release --example fusion_sweep -- [train_fraction]

use std::sync::Arc;

use spatial_relation::dataset::{generate_synthetic, standard_split, subsample_fraction, SynthConfig};
use spatial_relation::evaluation::accuracy;
use spatial_relation::fusion::{sweep_inputs, FusionConfig, FusionInputs, Projector};
use spatial_relation::model::{train, Tables, TrainConfig};
use spatial_relation::prior::CooccurrencePrior;

fn main() -> spatial_relation::Result<()> {
    let fraction = std::env::args().nth(1).map_or(0.02, |s| s.parse().expect("fraction"));
    let out = generate_synthetic(&SynthConfig { n: 4000, text_coupling: 0.9, seed: 11, ..SynthConfig::default() })?;
    let tables = Tables::new(&out.word, Some(&out.visual));
    let split = standard_split(&out.dataset, [0.70, 0.15, 0.15], 0)?;
    let small = subsample_fraction(&split.train, fraction, 0)?;
    let model = train(&small, &split.dev, tables, &TrainConfig::default())?.model;

    // The prior sees the full training split, the classifier only a slice.
    let prior = CooccurrencePrior::fit(&split.train, 0.1)?;
    let projector = Projector::new(Arc::new(out.dataset.relation_vocab().clone()), &out.word)?;
    let dev = FusionInputs::prepare(&model, &prior, &projector, &split.dev, tables)?;
    let sweep = sweep_inputs(&dev, &FusionConfig::default().lambda_grid)?;
    for (l, a) in sweep.grid.iter().zip(&sweep.dev_accuracy) {
        println!("lambda {l:<5} dev {a:.4}");
    }

    let test = FusionInputs::prepare(&model, &prior, &projector, &split.test, tables)?;
    println!("trained on {} triples", small.len());
    println!("classifier  test {:.4}", accuracy(&test.ff, &test.golds)?);
    println!("prior       test {:.4}", accuracy(&test.prior, &test.golds)?);
    println!("fused ({})  test {:.4}", sweep.best_lambda, accuracy(&test.fused(sweep.best_lambda)?, &test.golds)?);
    Ok(())
}
