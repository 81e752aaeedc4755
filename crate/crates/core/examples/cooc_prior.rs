//! Fits the smoothed co-occurrence prior and queries seen and unseen pairs.
//!
//! cargo run --example cooc_prior -- [smoothing]

use spatial_relation::dataset::{generate_synthetic, RelationScheme, SynthConfig};
use spatial_relation::prior::{CooccurrencePrior, PriorProvider};

fn main() -> spatial_relation::Result<()> {
    let alpha = std::env::args().nth(1).map_or(0.1, |s| s.parse().expect("smoothing"));
    let data = generate_synthetic(&SynthConfig {
        n: 3000,
        scheme: RelationScheme::Mixed,
        text_coupling: 0.8,
        ..SynthConfig::default()
    })?
    .dataset;
    let prior = CooccurrencePrior::fit(&data, alpha)?.with_top_k(3);

    let first = &data.triples()[0];
    let queries = [
        (first.subject.text.clone(), first.object.text.clone()),
        (first.subject.text.clone(), "spaceship".to_string()),
        ("unicorn".to_string(), "spaceship".to_string()),
    ];
    for (s, o) in &queries {
        let record = prior.query(s, o)?;
        let ranked: Vec<String> = record.predictions.iter().map(|p| format!("{} {:.3}", p.relation, p.score)).collect();
        println!("({s}, {o}): {}", ranked.join(", "));
    }
    println!("gold of the first triple: {}", first.relation);
    Ok(())
}
