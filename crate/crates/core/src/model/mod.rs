//! Two-branch feed-forward relation classifier.
//!
//! Each entity is encoded as `[word; position]` (FF) or
//! `[word; position; visual]` (FF+I). The subject and object parts go through
//! separate rectified linear layers whose outputs are concatenated and fed to
//! a softmax head:
//!
//! ```text
//! h = [relu(W_s x_s + b_s); relu(W_o x_o + b_o)]
//! p = softmax(W_h h + b_h)
//! ```
//!
//! Gradients are derived by hand; `loss_and_grads` is checked against central
//! finite differences in the tests.

mod train;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Triple;
use crate::embeddings::{phrase_vector, EmbeddingTable};
use crate::error::{Error, Result};
use crate::scores::ScoreDist;
use crate::vocab::RelationVocab;

pub use train::{train, EpochRecord, TrainConfig, TrainOutcome};

/// Number of position features per entity: center x, center y, half width, half height.
pub const POSITION_DIM: usize = 4;

/// Embedding tables a model reads its features from.
#[derive(Debug, Clone, Copy)]
pub struct Tables<'a> {
    pub word: &'a EmbeddingTable,
    pub visual: Option<&'a EmbeddingTable>,
}

impl<'a> Tables<'a> {
    pub fn new(word: &'a EmbeddingTable, visual: Option<&'a EmbeddingTable>) -> Self {
        Self { word, visual }
    }

    pub fn input_dim(&self, with_image: bool) -> Result<usize> {
        let visual = if with_image {
            self.visual.ok_or_else(|| Error::invalid("image features requested without a visual table"))?.dim()
        } else {
            0
        };
        Ok(self.word.dim() + POSITION_DIM + visual)
    }
}

/// Per-entity input vectors of one triple.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub subject_part: Vec<f64>,
    pub object_part: Vec<f64>,
    pub with_image: bool,
    /// Entity texts with no known token (0..=2).
    pub word_misses: u8,
    /// Visual keys absent from the visual table (0..=2).
    pub visual_misses: u8,
}

/// Assembles `[word; position]` or `[word; position; visual]` for both entities.
pub fn build_features(triple: &Triple, tables: Tables<'_>, with_image: bool) -> Result<FeatureVector> {
    let visual = match (with_image, tables.visual) {
        (true, Some(v)) => Some(v),
        (true, None) => return Err(Error::invalid("image features requested without a visual table")),
        (false, _) => None,
    };
    let mut word_misses = 0u8;
    let mut visual_misses = 0u8;
    let mut part = |entity: &crate::dataset::Entity| {
        let phrase = phrase_vector(tables.word, &entity.text);
        word_misses += u8::from(phrase.oov);
        let mut v = phrase.vector;
        v.extend_from_slice(&entity.bbox.to_array());
        if let Some(table) = visual {
            match table.get(&entity.vis_key) {
                Some(iv) => v.extend_from_slice(iv),
                None => {
                    visual_misses += 1;
                    v.extend(std::iter::repeat_n(0.0, table.dim()));
                }
            }
        }
        v
    };
    let subject_part = part(&triple.subject);
    let object_part = part(&triple.object);
    Ok(FeatureVector { subject_part, object_part, with_image, word_misses, visual_misses })
}

/// Dense row-major matrix; serialized as nested rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `self · x + bias`.
    fn affine(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.cols)
            .zip(bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// `self += scale · outer(left, right)`.
    fn add_outer(&mut self, scale: f64, left: &[f64], right: &[f64]) {
        for (row, l) in self.data.chunks_exact_mut(self.cols).zip(left) {
            let f = scale * l;
            if f != 0.0 {
                row.iter_mut().zip(right).for_each(|(w, r)| *w += f * r);
            }
        }
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = (0..self.rows).map(|r| self.row(r)).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Weights and biases of the classifier. The activation is fixed to ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub w_s: Matrix,
    pub b_s: Vec<f64>,
    pub w_o: Matrix,
    pub b_o: Vec<f64>,
    pub w_h: Matrix,
    pub b_h: Vec<f64>,
}

/// Intermediate values of one forward pass.
struct Activations {
    z_s: Vec<f64>,
    z_o: Vec<f64>,
    h: Vec<f64>,
    logits: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(in_dim: usize, hidden: usize, vocab: usize) -> Self {
        Self {
            w_s: Matrix::zeros(hidden, in_dim),
            b_s: vec![0.0; hidden],
            w_o: Matrix::zeros(hidden, in_dim),
            b_o: vec![0.0; hidden],
            w_h: Matrix::zeros(vocab, 2 * hidden),
            b_h: vec![0.0; vocab],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w_s.cols
    }

    pub fn hidden(&self) -> usize {
        self.b_s.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.b_h.len()
    }

    pub fn check_shapes(&self) -> Result<()> {
        let (d, h, v) = (self.in_dim(), self.hidden(), self.vocab_size());
        let ok = self.w_s.rows == h
            && self.w_o.rows == h
            && self.w_o.cols == d
            && self.b_o.len() == h
            && self.w_h.rows == v
            && self.w_h.cols == 2 * h;
        if !ok {
            return Err(Error::Shape(format!("inconsistent parameter shapes for in={d} hidden={h} vocab={v}")));
        }
        if self.tensors().iter().any(|t| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }

    /// The six tensors in the order w_s, b_s, w_o, b_o, w_h, b_h.
    pub fn tensors(&self) -> [&[f64]; 6] {
        [self.w_s.as_slice(), &self.b_s, self.w_o.as_slice(), &self.b_o, self.w_h.as_slice(), &self.b_h]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w_s.as_mut_slice(),
            &mut self.b_s,
            self.w_o.as_mut_slice(),
            &mut self.b_o,
            self.w_h.as_mut_slice(),
            &mut self.b_h,
        ]
    }

    /// `self += scale · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.iter_mut().zip(src).for_each(|(d, s)| *d += scale * s);
        }
    }

    fn check_input(&self, x: &FeatureVector) -> Result<()> {
        if x.subject_part.len() != self.in_dim() || x.object_part.len() != self.in_dim() {
            return Err(Error::Shape(format!(
                "feature parts of length {}/{} for a model with input dim {}",
                x.subject_part.len(),
                x.object_part.len(),
                self.in_dim()
            )));
        }
        Ok(())
    }

    fn activations(&self, x: &FeatureVector) -> Activations {
        let z_s = self.w_s.affine(&x.subject_part, &self.b_s);
        let z_o = self.w_o.affine(&x.object_part, &self.b_o);
        let h: Vec<f64> = z_s.iter().chain(&z_o).map(|z| z.max(0.0)).collect();
        let logits = self.w_h.affine(&h, &self.b_h);
        Activations { z_s, z_o, h, logits }
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(softmax(&self.activations(x).logits))
    }

    /// Mean cross-entropy over `batch` and its exact gradient with respect to
    /// every parameter tensor.
    pub fn loss_and_grads(&self, batch: &[(&FeatureVector, usize)]) -> Result<(f64, ModelParams)> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        let (d, hidden, v) = (self.in_dim(), self.hidden(), self.vocab_size());
        let mut grads = ModelParams::zeros(d, hidden, v);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for &(x, gold) in batch {
            if gold >= v {
                return Err(Error::invalid(format!("gold index {gold} outside vocabulary of {v}")));
            }
            self.check_input(x)?;
            let act = self.activations(x);
            let log_probs = log_softmax(&act.logits);
            loss -= log_probs[gold];

            // d loss / d logits = p - onehot(gold)
            let mut dlogits: Vec<f64> = log_probs.iter().map(|lp| lp.exp()).collect();
            dlogits[gold] -= 1.0;

            grads.w_h.add_outer(scale, &dlogits, &act.h);
            grads.b_h.iter_mut().zip(&dlogits).for_each(|(g, dl)| *g += scale * dl);

            let mut dh = vec![0.0; 2 * hidden];
            for (row, dl) in self.w_h.data.chunks_exact(2 * hidden).zip(&dlogits) {
                dh.iter_mut().zip(row).for_each(|(acc, w)| *acc += w * dl);
            }
            let (dh_s, dh_o) = dh.split_at(hidden);
            let relu_grad = |dh: &[f64], z: &[f64]| -> Vec<f64> {
                dh.iter().zip(z).map(|(g, z)| if *z > 0.0 { *g } else { 0.0 }).collect()
            };
            let dz_s = relu_grad(dh_s, &act.z_s);
            let dz_o = relu_grad(dh_o, &act.z_o);
            grads.w_s.add_outer(scale, &dz_s, &x.subject_part);
            grads.b_s.iter_mut().zip(&dz_s).for_each(|(g, dz)| *g += scale * dz);
            grads.w_o.add_outer(scale, &dz_o, &x.object_part);
            grads.b_o.iter_mut().zip(&dz_o).for_each(|(g, dz)| *g += scale * dz);
        }
        Ok((loss * scale, grads))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Uniform `±sqrt(6 / (fan_in + fan_out))` weights per matrix, zero biases.
pub fn init_params(in_dim: usize, hidden: usize, vocab: usize, seed: u64) -> Result<ModelParams> {
    if in_dim == 0 || hidden == 0 || vocab == 0 {
        return Err(Error::invalid("model dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::zeros(in_dim, hidden, vocab);
    for m in [&mut params.w_s, &mut params.w_o, &mut params.w_h] {
        let bound = (6.0 / (m.rows + m.cols) as f64).sqrt();
        m.data.iter_mut().for_each(|w| *w = rng.random_range(-bound..=bound));
    }
    Ok(params)
}

/// A trained classifier together with its relation vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialModel {
    pub params: ModelParams,
    pub vocab: Arc<RelationVocab>,
    pub with_image: bool,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    in_dim: usize,
    hidden: usize,
    vocab_size: usize,
    with_image: bool,
    vocab: RelationVocab,
    config: TrainConfig,
    params: ModelParams,
}

const CHECKPOINT_FORMAT: &str = "spatial-relation-model/1";

impl SpatialModel {
    pub fn features(&self, triple: &Triple, tables: Tables<'_>) -> Result<FeatureVector> {
        build_features(triple, tables, self.with_image)
    }

    /// Probability distribution over the model vocabulary.
    pub fn predict(&self, triple: &Triple, tables: Tables<'_>) -> Result<ScoreDist> {
        let x = self.features(triple, tables)?;
        self.predict_features(&x)
    }

    pub fn predict_features(&self, x: &FeatureVector) -> Result<ScoreDist> {
        Ok(ScoreDist { vocab: Arc::clone(&self.vocab), scores: self.params.forward(x)?, normalized: true })
    }

    /// Predictions for every triple, in input order.
    pub fn predict_all<'t, I>(&self, triples: I, tables: Tables<'_>) -> Result<Vec<ScoreDist>>
    where
        I: IntoParallelIterator<Item = &'t Triple>,
        I::Iter: IndexedParallelIterator,
    {
        triples.into_par_iter().map(|t| self.predict(t, tables)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            in_dim: self.params.in_dim(),
            hidden: self.params.hidden(),
            vocab_size: self.params.vocab_size(),
            with_image: self.with_image,
            vocab: (*self.vocab).clone(),
            config: self.config.clone(),
            params: self.params.clone(),
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(json)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid(format!("unsupported checkpoint format {:?}", ckpt.format)));
        }
        ckpt.params.check_shapes()?;
        let p = &ckpt.params;
        if (p.in_dim(), p.hidden(), p.vocab_size()) != (ckpt.in_dim, ckpt.hidden, ckpt.vocab_size)
            || ckpt.vocab.len() != ckpt.vocab_size
        {
            return Err(Error::Shape("checkpoint dims disagree with its tensors".into()));
        }
        Ok(Self { params: ckpt.params, vocab: Arc::new(ckpt.vocab), with_image: ckpt.with_image, config: ckpt.config })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{BoundingBox, Entity};
    use crate::embeddings::EmbeddingKind;

    fn word_table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2, EmbeddingKind::Word).unwrap();
        t.insert("cup", vec![1.0, -1.0]).unwrap();
        t.insert("table", vec![0.5, 2.0]).unwrap();
        t.insert("wooden", vec![1.5, 0.0]).unwrap();
        t
    }

    fn visual_table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(3, EmbeddingKind::Visual).unwrap();
        t.insert("cup", vec![0.1, 0.2, 0.3]).unwrap();
        t
    }

    fn sample_triple() -> Triple {
        Triple::new(
            "1",
            Entity::new("cup", BoundingBox::new(0.5, 0.5, 0.1, 0.2).unwrap(), None).unwrap(),
            "on",
            Entity::new("wooden table", BoundingBox::new(0.4, 0.7, 0.3, 0.1).unwrap(), None).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn features_concatenate_word_position_visual() {
        let (w, v) = (word_table(), visual_table());
        let t = sample_triple();
        let f = build_features(&t, Tables::new(&w, None), false).unwrap();
        assert_eq!(f.subject_part, vec![1.0, -1.0, 0.5, 0.5, 0.1, 0.2]);
        assert_eq!(f.object_part, vec![1.0, 1.0, 0.4, 0.7, 0.3, 0.1]);

        let f = build_features(&t, Tables::new(&w, Some(&v)), true).unwrap();
        assert_eq!(f.subject_part.len(), 9);
        assert_eq!(&f.subject_part[6..], &[0.1, 0.2, 0.3]);
        // "table" (head of "wooden table") has no visual vector.
        assert_eq!(&f.object_part[6..], &[0.0, 0.0, 0.0]);
        assert_eq!(f.visual_misses, 1);
        assert!(build_features(&t, Tables::new(&w, None), true).is_err());
    }

    #[test]
    fn init_rule() {
        let p = init_params(304, 128, 40, 3).unwrap();
        assert_eq!((p.w_h.rows(), p.w_h.cols()), (40, 256));
        let bound = (6.0f64 / 296.0).sqrt();
        assert!((bound - 0.1424).abs() < 1e-4);
        assert!(p.w_h.as_slice().iter().all(|w| w.abs() <= bound));
        assert!(p.b_s.iter().chain(&p.b_o).chain(&p.b_h).all(|b| *b == 0.0));
        assert_eq!(p, init_params(304, 128, 40, 3).unwrap());
        assert_ne!(p, init_params(304, 128, 40, 4).unwrap());
        assert!(init_params(0, 1, 1, 0).is_err());
    }

    fn features(d: usize, seed: u64) -> FeatureVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut part = || (0..d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        FeatureVector { subject_part: part(), object_part: part(), with_image: false, word_misses: 0, visual_misses: 0 }
    }

    #[test]
    fn zero_params_are_uniform() {
        let p = ModelParams::zeros(3, 2, 4);
        assert_eq!(p.forward(&features(3, 0)).unwrap(), vec![0.25; 4]);
        let (loss, _) = p.loss_and_grads(&[(&features(3, 0), 2)]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn crafted_logits() {
        let mut p = ModelParams::zeros(2, 1, 3);
        p.b_h = vec![2f64.ln(), 0.0, 0.0];
        let out = p.forward(&features(2, 1)).unwrap();
        for (o, e) in out.iter().zip([0.5, 0.25, 0.25]) {
            assert!((o - e).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut p = init_params(3, 4, 5, 9).unwrap();
        p.b_h = vec![0.1, -0.3, 0.7, 0.0, 2.0];
        let x = features(3, 2);
        let before = p.forward(&x).unwrap();
        p.b_h.iter_mut().for_each(|b| *b += 123.25);
        let after = p.forward(&x).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((after.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(after.iter().all(|p| *p > 0.0));
    }

    #[test]
    fn shape_and_gold_errors() {
        let p = init_params(3, 2, 4, 0).unwrap();
        assert!(p.forward(&features(4, 0)).is_err());
        assert!(p.loss_and_grads(&[(&features(3, 0), 4)]).is_err());
        assert!(p.loss_and_grads(&[]).is_err());
    }

    #[test]
    fn duplicated_batch_is_invariant() {
        let p = init_params(5, 6, 4, 1).unwrap();
        let xs: Vec<FeatureVector> = (0..4).map(|s| features(5, s)).collect();
        let batch: Vec<(&FeatureVector, usize)> = xs.iter().zip([0, 1, 3, 2]).collect();
        let doubled: Vec<(&FeatureVector, usize)> = batch.iter().chain(&batch).copied().collect();
        let (l1, g1) = p.loss_and_grads(&batch).unwrap();
        let (l2, g2) = p.loss_and_grads(&doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-9);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    /// Central finite differences of the mean loss, computed through
    /// `forward` only.
    fn numeric_grads(p: &ModelParams, batch: &[(&FeatureVector, usize)], step: f64) -> Vec<Vec<f64>> {
        let loss = |q: &ModelParams| -> f64 {
            batch.iter().map(|(x, g)| -q.forward(x).unwrap()[*g].ln()).sum::<f64>() / batch.len() as f64
        };
        let mut out = Vec::new();
        for t in 0..6 {
            let len = p.tensors()[t].len();
            let mut g = Vec::with_capacity(len);
            for i in 0..len {
                let mut plus = p.clone();
                plus.tensors_mut()[t][i] += step;
                let mut minus = p.clone();
                minus.tensors_mut()[t][i] -= step;
                g.push((loss(&plus) - loss(&minus)) / (2.0 * step));
            }
            out.push(g);
        }
        out
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut p = init_params(6, 5, 4, 17).unwrap();
        p.b_s = vec![0.05, -0.02, 0.1, 0.0, 0.3];
        p.b_h = vec![0.2, -0.1, 0.0, 0.4];
        let xs: Vec<FeatureVector> = (0..3).map(|s| features(6, 100 + s)).collect();
        let batch: Vec<(&FeatureVector, usize)> = xs.iter().zip([1, 3, 0]).collect();
        let (_, analytic) = p.loss_and_grads(&batch).unwrap();
        let numeric = numeric_grads(&p, &batch, 1e-5);
        for (a, n) in analytic.tensors().iter().zip(&numeric) {
            for (x, y) in a.iter().zip(n) {
                let rel = (x - y).abs() / x.abs().max(y.abs()).max(1e-6);
                assert!(rel < 1e-4, "analytic {x} vs numeric {y}");
            }
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let model = SpatialModel {
            params: init_params(6, 4, 3, 5).unwrap(),
            vocab: Arc::new(RelationVocab::from_names(["on", "under", "left of"])),
            with_image: false,
            config: TrainConfig::default(),
        };
        let back = SpatialModel::from_json(&model.to_json().unwrap()).unwrap();
        for (a, b) in model.params.tensors().iter().zip(back.params.tensors()) {
            assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(back, model);
        assert!(SpatialModel::from_json(&model.to_json().unwrap().replace("\"hidden\":4", "\"hidden\":5")).is_err());
    }

    #[test]
    fn predict_is_composition() {
        let w = word_table();
        let tables = Tables::new(&w, None);
        let t = sample_triple();
        let model = SpatialModel {
            params: init_params(6, 4, 2, 8).unwrap(),
            vocab: Arc::new(RelationVocab::from_names(["on", "under"])),
            with_image: false,
            config: TrainConfig::default(),
        };
        let direct = model.params.forward(&build_features(&t, tables, false).unwrap()).unwrap();
        assert_eq!(model.predict(&t, tables).unwrap().scores, direct);
        let all = model.predict_all(vec![&t, &t], tables).unwrap();
        assert_eq!(all.len(), 2);
    }
}
