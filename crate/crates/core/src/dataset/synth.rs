//! Desk-scale synthetic triples with matching word and visual tables.
//!
//! The geometric scheme labels each pair from box-center geometry only; the
//! visual scheme labels it from the latent cluster the object's visual vector
//! was drawn from; the mixed scheme combines the two. Entity texts carry no
//! label information unless `text_coupling` is raised above zero.

use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{BoundingBox, Category, Dataset, Entity, Triple};
use crate::embeddings::{EmbeddingKind, EmbeddingTable};
use crate::error::{Error, Result};

/// Geometric relations in label order; index 0 is the tie-break winner.
pub const GEOMETRIC_RELATIONS: [&str; 4] = ["above", "below", "left of", "right of"];

const VISUAL_RELATIONS: [&str; 8] =
    ["holding", "riding", "carrying", "wearing", "eating", "watching", "pulling", "pushing"];

/// Mixed-scheme relations for visual cluster 1, aligned with [`GEOMETRIC_RELATIONS`].
const MIXED_SECOND_FAMILY: [&str; 4] = ["flying", "sitting under", "walking left of", "walking right of"];

const NOUNS: [&str; 40] = [
    "man", "woman", "kid", "dog", "cat", "horse", "bird", "car", "bike", "tree", "table", "chair", "cup", "plate",
    "book", "lamp", "window", "door", "bed", "sofa", "kite", "ball", "hat", "shirt", "bag", "bottle", "phone", "clock",
    "boat", "train", "bus", "sign", "pole", "fence", "road", "grass", "sky", "wall", "floor", "shelf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationScheme {
    Geometric,
    Visual,
    Mixed,
}

impl FromStr for RelationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Self::Geometric),
            "visual" => Ok(Self::Visual),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::invalid(format!("unknown relation scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub scheme: RelationScheme,
    pub subjects: usize,
    pub objects: usize,
    pub word_dim: usize,
    pub visual_dim: usize,
    /// Number of relations (latent clusters) for the visual scheme, 2..=8.
    pub visual_relations: usize,
    /// Standard deviation of object visual vectors around their cluster center.
    pub cluster_spread: f64,
    /// Fraction of labels replaced by a uniformly drawn different relation.
    pub noise: f64,
    /// Probability that an entity text is drawn from the word group tied to
    /// the triple's relation instead of uniformly.
    pub text_coupling: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            scheme: RelationScheme::Geometric,
            subjects: 20,
            objects: 20,
            word_dim: 16,
            visual_dim: 8,
            visual_relations: 4,
            cluster_spread: 0.35,
            noise: 0.0,
            text_coupling: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::invalid(format!("synthetic config: {msg}")));
        if self.n < 10 {
            return bad("n must be at least 10");
        }
        if self.subjects == 0 || self.objects == 0 {
            return bad("subject and object pools must be non-empty");
        }
        if self.word_dim == 0 || self.visual_dim == 0 {
            return bad("embedding dimensions must be positive");
        }
        if !(2..=VISUAL_RELATIONS.len()).contains(&self.visual_relations) {
            return bad("visual_relations must be in 2..=8");
        }
        if !(0.0..=1.0).contains(&self.noise) || !(0.0..=1.0).contains(&self.text_coupling) {
            return bad("noise and text_coupling must be in [0, 1]");
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread >= 0.0) {
            return bad("cluster_spread must be finite and non-negative");
        }
        Ok(())
    }

    pub fn relations(&self) -> Vec<&'static str> {
        match self.scheme {
            RelationScheme::Geometric => GEOMETRIC_RELATIONS.to_vec(),
            RelationScheme::Visual => VISUAL_RELATIONS[..self.visual_relations].to_vec(),
            RelationScheme::Mixed => GEOMETRIC_RELATIONS.iter().chain(&MIXED_SECOND_FAMILY).copied().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub word: EmbeddingTable,
    pub visual: EmbeddingTable,
}

/// Index into [`GEOMETRIC_RELATIONS`] of the subject's position relative to
/// the object. The dominant axis of the center offset decides; ties (including
/// identical centers) go to the vertical axis, and a zero vertical offset to
/// "above".
pub fn geometric_label(subject: &BoundingBox, object: &BoundingBox) -> usize {
    let dx = object.cx - subject.cx;
    let dy = object.cy - subject.cy;
    if dx.abs() > dy.abs() {
        if dx > 0.0 {
            2
        } else {
            3
        }
    } else if dy >= 0.0 {
        0
    } else {
        1
    }
}

fn pool(offset: usize, size: usize) -> Vec<String> {
    (0..size)
        .map(|i| {
            let j = offset + i;
            let base = NOUNS[j % NOUNS.len()];
            match j / NOUNS.len() {
                0 => base.to_string(),
                round => format!("{base}{round}"),
            }
        })
        .collect()
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    BoundingBox { cx: rng.random(), cy: rng.random(), hw: rng.random_range(0.01..0.2), hh: rng.random_range(0.01..0.2) }
}

fn pick_text<'a>(rng: &mut ChaCha8Rng, words: &'a [String], label: usize, groups: usize, coupling: f64) -> &'a str {
    if coupling > 0.0 && rng.random::<f64>() < coupling {
        let group: Vec<&String> = words.iter().skip(label % groups).step_by(groups).collect();
        if !group.is_empty() {
            return group[rng.random_range(0..group.len())];
        }
    }
    &words[rng.random_range(0..words.len())]
}

/// Generates a labelled dataset plus word and visual tables covering every
/// entity text, relation token and per-entity visual key.
pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let relations = config.relations();
    let subjects = pool(0, config.subjects);
    let objects = pool(config.subjects, config.objects);

    let mut word = EmbeddingTable::new(config.word_dim, EmbeddingKind::Word)?;
    let relation_tokens = relations.iter().flat_map(|r| r.split_whitespace());
    // Unit expected norm keeps text on the same scale as the box features.
    let word_scale = 1.0 / (config.word_dim as f64).sqrt();
    for token in subjects.iter().map(String::as_str).chain(objects.iter().map(String::as_str)).chain(relation_tokens) {
        let v = gaussian(&mut rng, config.word_dim, word_scale);
        word.insert(token, v)?;
    }

    let clusters = match config.scheme {
        RelationScheme::Geometric => 0,
        RelationScheme::Visual => config.visual_relations,
        RelationScheme::Mixed => 2,
    };
    let centers: Vec<Vec<f64>> = (0..clusters).map(|_| gaussian(&mut rng, config.visual_dim, 1.0)).collect();

    // Boxes, visual vectors and clean labels.
    let mut labels = Vec::with_capacity(config.n);
    let mut boxes = Vec::with_capacity(config.n);
    let mut visuals = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let (sb, ob) = (random_box(&mut rng), random_box(&mut rng));
        let subject_vis = gaussian(&mut rng, config.visual_dim, 1.0);
        let (label, object_vis) = match config.scheme {
            RelationScheme::Geometric => (geometric_label(&sb, &ob), gaussian(&mut rng, config.visual_dim, 1.0)),
            RelationScheme::Visual => {
                let c = rng.random_range(0..clusters);
                (c, around(&mut rng, &centers[c], config.cluster_spread))
            }
            RelationScheme::Mixed => {
                let c = rng.random_range(0..clusters);
                (c * 4 + geometric_label(&sb, &ob), around(&mut rng, &centers[c], config.cluster_spread))
            }
        };
        labels.push(label);
        boxes.push((sb, ob));
        visuals.push((subject_vis, object_vis));
    }

    let n_noisy = (config.noise * config.n as f64).round() as usize;
    for i in index::sample(&mut rng, config.n, n_noisy.min(config.n)) {
        let shift = rng.random_range(1..relations.len());
        labels[i] = (labels[i] + shift) % relations.len();
    }

    let category = match config.scheme {
        RelationScheme::Geometric => Category::Explicit,
        _ => Category::Implicit,
    };
    let mut visual = EmbeddingTable::new(config.visual_dim, EmbeddingKind::Visual)?;
    let mut triples = Vec::with_capacity(config.n);
    for (i, ((label, (sb, ob)), (sv, ov))) in labels.iter().zip(boxes).zip(visuals).enumerate() {
        let groups = relations.len();
        let s_text = pick_text(&mut rng, &subjects, *label, groups, config.text_coupling);
        let o_text = pick_text(&mut rng, &objects, *label, groups, config.text_coupling);
        let (s_key, o_key) = (format!("img{i}_s"), format!("img{i}_o"));
        visual.insert(s_key.clone(), sv)?;
        visual.insert(o_key.clone(), ov)?;
        triples.push(Triple {
            image_id: format!("img{i}"),
            subject: Entity::new(s_text, sb, Some(s_key))?,
            relation: relations[*label].to_string(),
            object: Entity::new(o_text, ob, Some(o_key))?,
            category,
        });
    }

    Ok(SynthOutput { dataset: Dataset::new(triples), word, visual })
}

fn around(rng: &mut ChaCha8Rng, center: &[f64], spread: f64) -> Vec<f64> {
    center.iter().map(|c| c + spread * rng.sample::<f64, _>(StandardNormal)).collect()
}
