//! Language-model relation priors: ranked relation lists for a
//! (subject, object) pair, independent of the image.
//!
//! Three providers share the [`PriorProvider`] interface:
//! - [`FilePrior`]: predictions computed offline (e.g. masked-LM fills) and
//!   stored as JSONL;
//! - [`CooccurrencePrior`]: a smoothed co-occurrence model fitted on triples;
//! - [`RemotePrior`]: a client for the HTTP scoring service.

mod cooc;
mod remote;

use std::collections::HashMap;
use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::normalize_relation;

pub use cooc::{CooccurrencePrior, DEFAULT_SMOOTHING};
pub use remote::{RemoteConfig, RemotePrior};

pub const DEFAULT_TOP_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub relation: String,
    pub score: f64,
}

/// Ranked relation predictions for one (subject, object) query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorRecord {
    pub subject: String,
    pub object: String,
    pub predictions: Vec<Prediction>,
}

impl PriorRecord {
    pub fn empty(subject: &str, object: &str) -> Self {
        Self { subject: subject.to_string(), object: object.to_string(), predictions: Vec::new() }
    }

    /// Checks scores are finite, non-negative and non-increasing, and
    /// relations are distinct and non-empty.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, p) in self.predictions.iter().enumerate() {
            if p.relation.trim().is_empty() {
                return Err(Error::invalid(format!("prediction {i} has an empty relation")));
            }
            if !p.score.is_finite() || p.score < 0.0 {
                return Err(Error::invalid(format!("prediction {:?} has invalid score {}", p.relation, p.score)));
            }
            if i > 0 && p.score > self.predictions[i - 1].score {
                return Err(Error::invalid(format!(
                    "non-increasing violated at prediction {i} ({} after {})",
                    p.score,
                    self.predictions[i - 1].score
                )));
            }
            if !seen.insert(p.relation.as_str()) {
                return Err(Error::invalid(format!("duplicate relation {:?}", p.relation)));
            }
        }
        Ok(())
    }

    fn normalized(mut self) -> Self {
        self.subject = normalize_relation(&self.subject);
        self.object = normalize_relation(&self.object);
        for p in &mut self.predictions {
            p.relation = normalize_relation(&p.relation);
        }
        self
    }

    fn truncated(mut self, top_k: usize) -> Self {
        self.predictions.truncate(top_k);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    File,
    Cooccurrence,
    Remote,
}

/// Source of relation priors.
pub trait PriorProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;

    /// Maximum number of predictions per record.
    fn top_k(&self) -> usize;

    fn query(&self, subject: &str, object: &str) -> Result<PriorRecord>;
}

/// Precomputed records keyed by lowercased (subject, object).
#[derive(Debug, Clone, Default)]
pub struct FilePrior {
    records: HashMap<(String, String), PriorRecord>,
    top_k: usize,
}

impl FilePrior {
    pub fn from_records(records: impl IntoIterator<Item = PriorRecord>, top_k: usize) -> Result<Self> {
        let mut map = HashMap::new();
        for record in records {
            let record = record.normalized();
            record.validate()?;
            let key = (record.subject.clone(), record.object.clone());
            if map.insert(key, record).is_some() {
                return Err(Error::invalid("duplicate (subject, object) key"));
            }
        }
        Ok(Self { records: map, top_k })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl PriorProvider for FilePrior {
    fn kind(&self) -> ProviderKind {
        ProviderKind::File
    }

    fn top_k(&self) -> usize {
        self.top_k
    }

    fn query(&self, subject: &str, object: &str) -> Result<PriorRecord> {
        let key = (normalize_relation(subject), normalize_relation(object));
        Ok(match self.records.get(&key) {
            Some(r) => r.clone().truncated(self.top_k),
            None => PriorRecord::empty(&key.0, &key.1),
        })
    }
}

/// Loads a JSONL prior file.
pub fn load_prior_file(path: impl AsRef<Path>, top_k: usize) -> Result<FilePrior> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_prior_file(BufReader::new(file), &path.display().to_string(), top_k)
}

pub fn read_prior_file(reader: impl BufRead, source: &str, top_k: usize) -> Result<FilePrior> {
    let mut records = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PriorRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source, lineno, format!("malformed prior record: {e}")))?;
        let record = record.normalized();
        record.validate().map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        let key = (record.subject.clone(), record.object.clone());
        if records.contains_key(&key) {
            return Err(Error::parse(source, lineno, format!("duplicate key ({:?}, {:?})", key.0, key.1)));
        }
        records.insert(key, record);
    }
    Ok(FilePrior { records, top_k })
}

/// Writes records as JSONL in the given order.
pub fn write_prior_file<'a>(path: impl AsRef<Path>, records: impl IntoIterator<Item = &'a PriorRecord>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
