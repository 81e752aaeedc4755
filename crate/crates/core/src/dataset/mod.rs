//! Triples with bounding boxes, the explicit/implicit partition, splits and
//! the majority baseline.

mod split;
mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{normalize_relation, RelationVocab};

pub use split::{
    standard_split, subsample_fraction, zero_shot_split, SplitBundle, SplitManifest, SplitMode, SplitSpec,
};
pub use synth::{generate_synthetic, RelationScheme, SynthConfig, SynthOutput, GEOMETRIC_RELATIONS};

/// Spatial prepositions treated as explicit relations when no lexicon file is given.
pub const DEFAULT_EXPLICIT_LEXICON: &[&str] = &[
    "on", "in", "under", "above", "below", "behind", "near", "beside", "over", "inside", "outside", "at", "against",
    "between",
];

/// Values within this distance outside `[0, 1]` are clamped instead of rejected.
const BOX_CLAMP_TOLERANCE: f64 = 1e-6;

/// Image-normalized box: center and half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub hw: f64,
    pub hh: f64,
}

impl BoundingBox {
    pub fn new(cx: f64, cy: f64, hw: f64, hh: f64) -> Result<Self> {
        Self::from_array([cx, cy, hw, hh])
            .map_err(|(field, v)| Error::invalid(format!("box field {field} = {v} outside [0, 1]")))
    }

    /// Validates and clamps near-boundary values; on failure returns the
    /// offending field name and value.
    fn from_array(raw: [f64; 4]) -> std::result::Result<Self, (&'static str, f64)> {
        const NAMES: [&str; 4] = ["cx", "cy", "hw", "hh"];
        let mut v = [0.0; 4];
        for (i, &x) in raw.iter().enumerate() {
            if !x.is_finite() || !(-BOX_CLAMP_TOLERANCE..=1.0 + BOX_CLAMP_TOLERANCE).contains(&x) {
                return Err((NAMES[i], x));
            }
            v[i] = x.clamp(0.0, 1.0);
        }
        Ok(Self { cx: v[0], cy: v[1], hw: v[2], hh: v[3] })
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.cx, self.cy, self.hw, self.hh]
    }
}

impl Serialize for BoundingBox {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entity {
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub vis_key: String,
}

impl Entity {
    /// Builds an entity; `vis_key` defaults to the head (last) token of the text.
    pub fn new(text: &str, bbox: BoundingBox, vis_key: Option<String>) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::invalid("entity text is empty"));
        }
        let vis_key = match vis_key {
            Some(k) if !k.trim().is_empty() => k.trim().to_string(),
            _ => head_token(text),
        };
        Ok(Self { text: text.to_string(), bbox, vis_key })
    }

    /// Lowercased, single-spaced text used for keys and prior lookups.
    pub fn key(&self) -> String {
        normalize_relation(&self.text)
    }
}

fn head_token(text: &str) -> String {
    text.split_whitespace().last().unwrap_or_default().to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Explicit,
    Implicit,
}

impl Category {
    pub fn of(relation: &str, lexicon: &HashSet<String>) -> Self {
        if lexicon.contains(relation) {
            Category::Explicit
        } else {
            Category::Implicit
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Triple {
    pub image_id: String,
    pub subject: Entity,
    pub relation: String,
    pub object: Entity,
    pub category: Category,
}

impl Triple {
    pub fn new(
        image_id: impl Into<String>,
        subject: Entity,
        relation: &str,
        object: Entity,
        category: Option<Category>,
    ) -> Result<Self> {
        let relation = normalize_relation(relation);
        if relation.is_empty() {
            return Err(Error::invalid("relation is empty"));
        }
        let category = category.unwrap_or_else(|| Category::of(&relation, &default_lexicon()));
        Ok(Self { image_id: image_id.into(), subject, relation, object, category })
    }
}

/// Ordered triples plus the relation vocabulary in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    triples: Vec<Triple>,
    relation_vocab: RelationVocab,
}

impl Dataset {
    pub fn new(triples: Vec<Triple>) -> Self {
        let relation_vocab = RelationVocab::from_names(triples.iter().map(|t| t.relation.clone()));
        Self { triples, relation_vocab }
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn relation_vocab(&self) -> &RelationVocab {
        &self.relation_vocab
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Triple> {
        self.triples.iter()
    }

    /// Triples at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset::new(indices.iter().map(|&i| self.triples[i].clone()).collect())
    }

    pub fn golds(&self) -> Vec<String> {
        self.triples.iter().map(|t| t.relation.clone()).collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for t in &self.triples {
            serde_json::to_writer(&mut out, t)?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Stable content hash (hex SHA-256 of the JSONL encoding, first 16 chars).
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for t in &self.triples {
            hasher.update(serde_json::to_vec(t).unwrap_or_default());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Triple;
    type IntoIter = std::slice::Iter<'a, Triple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.iter()
    }
}

impl FromIterator<Triple> for Dataset {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        Dataset::new(iter.into_iter().collect())
    }
}

#[derive(Deserialize)]
struct RawEntity {
    text: String,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    #[serde(default)]
    vis_key: Option<String>,
}

#[derive(Deserialize)]
struct RawTriple {
    #[serde(deserialize_with = "string_or_number")]
    image_id: String,
    subject: RawEntity,
    relation: String,
    object: RawEntity,
    #[serde(default)]
    category: Option<Category>,
}

fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("image_id must be a string, got {other}"))),
    }
}

fn entity_from_raw(raw: RawEntity, role: &str, source: &str, line: usize) -> Result<Entity> {
    let bbox = BoundingBox::from_array(raw.bbox)
        .map_err(|(field, v)| Error::parse(source, line, format!("{role}.box.{field} = {v} outside [0, 1]")))?;
    Entity::new(&raw.text, bbox, raw.vis_key).map_err(|e| Error::parse(source, line, format!("{role}: {e}")))
}

/// Reads a JSONL triple file in file order.
pub fn load_triples(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_triples(BufReader::new(file), &path.display().to_string())
}

pub fn read_triples(reader: impl BufRead, source: &str) -> Result<Dataset> {
    let lexicon = default_lexicon();
    let mut triples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTriple =
            serde_json::from_str(&line).map_err(|e| Error::parse(source, lineno, format!("malformed JSON: {e}")))?;
        let subject = entity_from_raw(raw.subject, "subject", source, lineno)?;
        let object = entity_from_raw(raw.object, "object", source, lineno)?;
        let relation = normalize_relation(&raw.relation);
        if relation.is_empty() {
            return Err(Error::parse(source, lineno, "relation is empty"));
        }
        let category = raw.category.unwrap_or_else(|| Category::of(&relation, &lexicon));
        triples.push(Triple { image_id: raw.image_id, subject, relation, object, category });
    }
    Ok(Dataset::new(triples))
}

pub fn default_lexicon() -> HashSet<String> {
    DEFAULT_EXPLICIT_LEXICON.iter().map(|s| s.to_string()).collect()
}

/// Reads a lexicon file: one relation per line, `#` starts a comment.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let lexicon: HashSet<String> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or_default())
        .map(normalize_relation)
        .filter(|l| !l.is_empty())
        .collect();
    if lexicon.is_empty() {
        return Err(Error::invalid(format!("lexicon {} is empty", path.display())));
    }
    Ok(lexicon)
}

/// Splits `dataset` into (explicit, implicit) by lexicon membership of the
/// relation. Order is preserved and each triple's category is rewritten.
pub fn classify_relations(dataset: &Dataset, lexicon: &HashSet<String>) -> Result<(Dataset, Dataset)> {
    if lexicon.is_empty() {
        return Err(Error::invalid("explicit lexicon is empty"));
    }
    let lexicon: HashSet<String> = lexicon.iter().map(|r| normalize_relation(r)).collect();
    let (explicit, implicit): (Vec<Triple>, Vec<Triple>) = dataset
        .iter()
        .cloned()
        .map(|mut t| {
            t.category = Category::of(&t.relation, &lexicon);
            t
        })
        .partition(|t| t.category == Category::Explicit);
    Ok((Dataset::new(explicit), Dataset::new(implicit)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub relation: String,
    pub count: usize,
    pub accuracy: f64,
}

/// Most frequent relation (ties → lexicographically smallest) and the
/// accuracy of always predicting it.
pub fn majority_baseline(dataset: &Dataset) -> Result<MajorityBaseline> {
    if dataset.is_empty() {
        return Err(Error::invalid("majority baseline of an empty dataset"));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in dataset {
        *counts.entry(t.relation.as_str()).or_default() += 1;
    }
    // BTreeMap iterates in lexicographic order, so the first maximum wins ties.
    let (relation, count) = counts
        .into_iter()
        .fold(None, |best: Option<(&str, usize)>, (r, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((r, c)),
        })
        .expect("non-empty");
    Ok(MajorityBaseline { relation: relation.to_string(), count, accuracy: count as f64 / dataset.len() as f64 })
}
