//! Loads a GloVe-format table and compares phrase vectors.
//!
//! cargo run --example embeddings -- [path/to/glove.txt]
//!
//! Without a path a tiny built-in table is used.

use std::io::Cursor;

use spatial_relation::embeddings::{cosine_similarity, load_embeddings, phrase_vector, read_embeddings, EmbeddingKind};

const TINY: &str = "\
on 0.9 0.1 0.0
above 0.7 0.6 0.1
over 0.68 0.62 0.12
under -0.6 0.7 0.0
next 0.1 -0.2 0.9
to 0.0 0.1 0.3
on 0.0 0.0 0.0
";

fn main() -> spatial_relation::Result<()> {
    let (table, report) = match std::env::args().nth(1) {
        Some(path) => load_embeddings(path, None, EmbeddingKind::Word)?,
        None => read_embeddings(Cursor::new(TINY), "built-in", None, EmbeddingKind::Word)?,
    };
    println!(
        "{} entries of dim {} from {} lines ({} duplicates, first kept)",
        report.entries,
        table.dim(),
        report.lines,
        report.duplicates
    );

    let phrases = ["on", "above", "over", "under", "next to", "in front of"];
    for a in phrases {
        let u = phrase_vector(&table, a);
        let row: Vec<String> = phrases
            .iter()
            .map(|b| {
                let v = phrase_vector(&table, b);
                if u.oov || v.oov {
                    "   oov".to_string()
                } else {
                    format!("{:>6.3}", cosine_similarity(&u.vector, &v.vector).unwrap_or(0.0))
                }
            })
            .collect();
        println!("{a:>12} {}", row.join(" "));
    }
    Ok(())
}
