//! Word and visual embedding tables.
//!
//! Both kinds share the GloVe text layout: one entry per line, the token
//! followed by `dim` decimal floats separated by single spaces. Word tables
//! back the averaged phrase vectors of entity texts and relation names;
//! visual tables are keyed by an entity's `vis_key`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Word,
    Visual,
}

/// Bookkeeping from [`load_embeddings`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines: usize,
    pub entries: usize,
    /// Lines whose token was already present; the first occurrence is kept.
    pub duplicates: usize,
}

/// Immutable token → vector table with a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    kind: EmbeddingKind,
    entries: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, kind: EmbeddingKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dimension must be positive"));
        }
        Ok(Self { dim, kind, entries: HashMap::new() })
    }

    /// Inserts a vector unless the token is already present.
    ///
    /// Returns `Ok(false)` for a duplicate token (the stored vector is kept).
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<bool> {
        let token = token.into();
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("bad embedding token {token:?}")));
        }
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector for {token:?} has {} components, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite component for {token:?}")));
        }
        if self.entries.contains_key(&token) {
            return Ok(false);
        }
        self.entries.insert(token, vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    /// Writes the table in GloVe text format, tokens sorted for stable output.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut tokens: Vec<&String> = self.entries.keys().collect();
        tokens.sort();
        for token in tokens {
            let mut line = token.clone();
            for v in &self.entries[token] {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Loads a GloVe-format table.
///
/// The dimension is `expected_dim` when given, otherwise the width of the
/// first line. Duplicate tokens keep their first vector and are counted in the
/// returned report.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
    kind: EmbeddingKind,
) -> Result<(EmbeddingTable, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), &path.display().to_string(), expected_dim, kind)
}

pub fn read_embeddings(
    reader: impl BufRead,
    source: &str,
    expected_dim: Option<usize>,
    kind: EmbeddingKind,
) -> Result<(EmbeddingTable, LoadReport)> {
    let mut table: Option<EmbeddingTable> = None;
    let mut report = LoadReport::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap_or_default();
        let vector = fields
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(source, lineno, format!("non-numeric component {f:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        let table = match &mut table {
            Some(t) => t,
            None => {
                let dim = expected_dim.unwrap_or(vector.len());
                if dim == 0 {
                    return Err(Error::parse(source, lineno, "entry has no components"));
                }
                table.insert(EmbeddingTable::new(dim, kind)?)
            }
        };
        if vector.len() != table.dim {
            return Err(Error::parse(
                source,
                lineno,
                format!("dim mismatch at line {lineno}: expected {}, found {}", table.dim, vector.len()),
            ));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(source, lineno, "non-finite component"));
        }
        report.lines += 1;
        if !table.insert(token, vector).map_err(|e| Error::parse(source, lineno, e.to_string()))? {
            report.duplicates += 1;
        }
    }
    let table = table.ok_or_else(|| Error::parse(source, 0, "empty embedding file"))?;
    report.entries = table.len();
    Ok((table, report))
}

/// Averaged vector of a (possibly multi-word) text.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseVector {
    pub vector: Vec<f64>,
    /// Set when none of the tokens was found; the vector is then all zeros.
    pub oov: bool,
}

/// Lowercased whitespace tokens of `text`.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace().map(str::to_lowercase)
}

/// Mean of the vectors of the in-vocabulary tokens of `text`.
///
/// Unknown tokens are skipped rather than zero-padded.
pub fn phrase_vector(table: &EmbeddingTable, text: &str) -> PhraseVector {
    let mut sum = vec![0.0; table.dim];
    let mut found = 0usize;
    for token in tokenize(text) {
        if let Some(v) = table.get(&token) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            found += 1;
        }
    }
    if found == 0 {
        return PhraseVector { vector: sum, oov: true };
    }
    if found > 1 {
        let n = found as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    PhraseVector { vector: sum, oov: false }
}

/// Cosine of the angle between `u` and `v`; zero if either has zero norm.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Shape(format!("cosine similarity of vectors with lengths {} and {}", u.len(), v.len())));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}
