//! Generates a synthetic corpus and writes it in the on-disk formats the
//! command line reads.
//!
//! cargo run --example synth -- [geometric|visual|mixed] [n] [out_dir]

use std::collections::BTreeMap;

use spatial_relation::dataset::{generate_synthetic, majority_baseline, RelationScheme, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scheme: RelationScheme = args.first().map_or(Ok(RelationScheme::Mixed), |s| s.parse())?;
    let n = args.get(1).map_or(2000, |s| s.parse().expect("n"));
    let out = generate_synthetic(&SynthConfig { n, scheme, text_coupling: 0.5, ..SynthConfig::default() })?;

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &out.dataset {
        *counts.entry(t.relation.as_str()).or_default() += 1;
    }
    println!("{} triples, fingerprint {}", out.dataset.len(), out.dataset.fingerprint());
    for (r, c) in &counts {
        println!("  {r:<14} {c}");
    }
    let base = majority_baseline(&out.dataset)?;
    println!("majority: {} ({:.3})", base.relation, base.accuracy);
    println!(
        "word table {} × {}, visual table {} × {}",
        out.word.len(),
        out.word.dim(),
        out.visual.len(),
        out.visual.dim()
    );
    println!("first triple: {}", serde_json::to_string(&out.dataset.triples()[0])?);

    if let Some(dir) = args.get(2) {
        let dir = std::path::Path::new(dir);
        std::fs::create_dir_all(dir)?;
        out.dataset.save(dir.join("triples.jsonl"))?;
        out.word.save(dir.join("word.txt"))?;
        out.visual.save(dir.join("visual.txt"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
