//! Trains the spatial classifier on geometric synthetic data, where the
//! relation is fixed by the box centers, and prints the per-epoch history.
//!
//! cargo run --release --example train_geometric -- [n] [epochs] [learning_rate] [batch_size] [patience] [seed]

use spatial_relation::dataset::{generate_synthetic, standard_split, SynthConfig};
use spatial_relation::evaluation::accuracy;
use spatial_relation::model::{train, Tables, TrainConfig};

fn arg<T: std::str::FromStr>(args: &[String], i: usize, default: T) -> T {
    args.get(i).map_or(default, |a| a.parse().unwrap_or_else(|_| panic!("bad argument {a:?}")))
}

fn main() -> spatial_relation::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let defaults = TrainConfig::default();
    let n = arg(&args, 0, 5000);
    let config = TrainConfig {
        max_epochs: arg(&args, 1, 50),
        learning_rate: arg(&args, 2, defaults.learning_rate),
        batch_size: arg(&args, 3, defaults.batch_size),
        patience: arg(&args, 4, defaults.patience),
        ..defaults
    };
    let seed = arg(&args, 5, 0);

    let synth = generate_synthetic(&SynthConfig { n, seed, ..SynthConfig::default() })?;
    let tables = Tables::new(&synth.word, Some(&synth.visual));
    let split = standard_split(&synth.dataset, [0.70, 0.15, 0.15], seed)?;
    let outcome = train(&split.train, &split.dev, tables, &config)?;

    for e in &outcome.history {
        println!("epoch {:>3}  loss {:.4}  dev {:.4}", e.epoch, e.train_loss, e.dev_accuracy);
    }
    let preds = outcome.model.predict_all(split.test.triples(), tables)?;
    println!("best epoch {}, test accuracy {:.4}", outcome.best_epoch, accuracy(&preds, &split.test.golds())?);
    Ok(())
}
