//! Standard and zero-shot splits, with the held-out key sets checked for
//! leakage and the manifest printed.
//!
//! cargo run --example splits -- [seed]

use spatial_relation::dataset::{
    generate_synthetic, standard_split, zero_shot_split, RelationScheme, SplitMode, SynthConfig,
};

fn main() -> spatial_relation::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let data =
        generate_synthetic(&SynthConfig { n: 1000, scheme: RelationScheme::Mixed, seed, ..SynthConfig::default() })?
            .dataset;

    let standard = standard_split(&data, [0.70, 0.15, 0.15], seed)?;
    println!("standard: {} / {} / {}", standard.train.len(), standard.dev.len(), standard.test.len());

    for mode in SplitMode::ZERO_SHOT {
        let split = zero_shot_split(&data, mode, 0.15, 0.15, seed)?;
        let [train, dev, test] = split.key_sets();
        let leaked = test.intersection(&train).count() + test.intersection(&dev).count();
        let mut held: Vec<&String> = test.iter().collect();
        held.sort();
        held.truncate(3);
        println!(
            "{mode}: {} / {} / {} triples, {} held-out keys (e.g. {held:?}), {leaked} leaked",
            split.train.len(),
            split.dev.len(),
            split.test.len(),
            test.len(),
        );
    }

    let manifest = zero_shot_split(&data, SplitMode::UnseenRelation, 0.15, 0.15, seed)?.manifest();
    let json = serde_json::to_string(&manifest)?;
    println!("manifest: {}…", &json[..json.len().min(120)]);
    Ok(())
}
