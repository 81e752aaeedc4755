//! Compares the hand-written backward pass with central finite differences
//! on one small random network.
//!
//! cargo run --example gradient_check -- [seed]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatial_relation::model::{init_params, FeatureVector, ModelParams};

fn main() -> spatial_relation::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dim, hidden, vocab) = (5, 4, 3);
    let params = init_params(dim, hidden, vocab, seed)?;
    let xs: Vec<FeatureVector> = (0..3)
        .map(|_| {
            let mut part = || (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            FeatureVector {
                subject_part: part(),
                object_part: part(),
                with_image: false,
                word_misses: 0,
                visual_misses: 0,
            }
        })
        .collect();
    let batch: Vec<(&FeatureVector, usize)> = xs.iter().zip([0, 2, 1]).collect();
    let loss = |p: &ModelParams| -> f64 {
        batch.iter().map(|(x, g)| -p.forward(x).unwrap()[*g].ln()).sum::<f64>() / batch.len() as f64
    };

    let (value, grads) = params.loss_and_grads(&batch)?;
    println!("loss {value:.6} (recomputed {:.6})", loss(&params));
    let names = ["W_s", "b_s", "W_o", "b_o", "W_h", "b_h"];
    let step = 1e-5;
    for (t, name) in names.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..params.tensors()[t].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[t][i] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[t][i] -= step;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * step);
            let analytic = grads.tensors()[t][i];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
        }
        println!("{name:<4} {:>4} entries, max relative error {worst:.2e}", params.tensors()[t].len());
    }
    Ok(())
}
