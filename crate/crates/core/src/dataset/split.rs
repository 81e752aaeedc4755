use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Triple};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    Standard,
    UnseenSubjectRelation,
    UnseenObjectRelation,
    UnseenRelation,
}

impl SplitMode {
    pub const ZERO_SHOT: [SplitMode; 3] =
        [SplitMode::UnseenSubjectRelation, SplitMode::UnseenObjectRelation, SplitMode::UnseenRelation];

    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::Standard => "standard",
            SplitMode::UnseenSubjectRelation => "unseen_subject_relation",
            SplitMode::UnseenObjectRelation => "unseen_object_relation",
            SplitMode::UnseenRelation => "unseen_relation",
        }
    }

    /// The key a zero-shot split holds out; `None` for the standard split.
    pub fn key(self, triple: &Triple) -> Option<String> {
        match self {
            SplitMode::Standard => None,
            SplitMode::UnseenSubjectRelation => Some(format!("{}\t{}", triple.subject.key(), triple.relation)),
            SplitMode::UnseenObjectRelation => Some(format!("{}\t{}", triple.object.key(), triple.relation)),
            SplitMode::UnseenRelation => Some(triple.relation.clone()),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SplitMode::Standard),
            "unseen_subject_relation" | "unseen_subject" => Ok(SplitMode::UnseenSubjectRelation),
            "unseen_object_relation" | "unseen_object" => Ok(SplitMode::UnseenObjectRelation),
            "unseen_relation" => Ok(SplitMode::UnseenRelation),
            other => Err(Error::invalid(format!("unknown split mode {other:?}"))),
        }
    }
}

/// How a split was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seed: u64,
    /// (train, dev, test) for standard splits; (1 - test_pair_fraction, dev_fraction,
    /// test_pair_fraction) for zero-shot splits.
    pub ratios: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SplitBundle {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    pub spec: SplitSpec,
    /// Source indices of each part, ascending.
    pub train_indices: Vec<usize>,
    pub dev_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Shareable JSON form of a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub mode: SplitMode,
    pub seed: u64,
    pub ratios: [f64; 3],
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitBundle {
    fn assemble(source: &Dataset, spec: SplitSpec, mut parts: [Vec<usize>; 3]) -> Self {
        parts.iter_mut().for_each(|p| p.sort_unstable());
        let [train_indices, dev_indices, test_indices] = parts;
        Self {
            train: source.select(&train_indices),
            dev: source.select(&dev_indices),
            test: source.select(&test_indices),
            spec,
            train_indices,
            dev_indices,
            test_indices,
        }
    }

    /// Distinct held-out keys of (train, dev, test); empty for standard splits.
    pub fn key_sets(&self) -> [HashSet<String>; 3] {
        let mode = self.spec.mode;
        [&self.train, &self.dev, &self.test].map(|ds| ds.iter().filter_map(|t| mode.key(t)).collect())
    }

    pub fn manifest(&self) -> SplitManifest {
        SplitManifest {
            mode: self.spec.mode,
            seed: self.spec.seed,
            ratios: self.spec.ratios,
            train: self.train_indices.clone(),
            dev: self.dev_indices.clone(),
            test: self.test_indices.clone(),
        }
    }

    /// Rebuilds a split of `source` from a manifest, checking that the index
    /// sets are disjoint and cover the dataset.
    pub fn from_manifest(source: &Dataset, manifest: &SplitManifest) -> Result<Self> {
        let mut seen = vec![false; source.len()];
        for &i in manifest.train.iter().chain(&manifest.dev).chain(&manifest.test) {
            match seen.get_mut(i) {
                None => return Err(Error::invalid(format!("manifest index {i} out of range"))),
                Some(true) => return Err(Error::invalid(format!("manifest index {i} appears twice"))),
                Some(s) => *s = true,
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("manifest does not cover the dataset"));
        }
        let spec = SplitSpec { mode: manifest.mode, seed: manifest.seed, ratios: manifest.ratios };
        Ok(Self::assemble(source, spec, [manifest.train.clone(), manifest.dev.clone(), manifest.test.clone()]))
    }
}

/// `round(x)` with halves rounded up. The small offset absorbs products like
/// `0.15 * 50` landing just below the half.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// Seeded uniform permutation followed by contiguous slicing.
///
/// Dev and test sizes are `round(ratio * n)`; train takes the remainder.
pub fn standard_split(dataset: &Dataset, ratios: [f64; 3], seed: u64) -> Result<SplitBundle> {
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::invalid(format!("split ratios must be positive, got {ratios:?}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split ratios sum to {total}, expected 1")));
    }
    let n = dataset.len();
    if n < 3 {
        return Err(Error::invalid(format!("cannot split a dataset of {n} triples")));
    }
    let n_dev = round_half_up(ratios[1] * n as f64);
    let n_test = round_half_up(ratios[2] * n as f64);
    if n_dev + n_test > n {
        return Err(Error::invalid("dev and test sizes exceed the dataset"));
    }
    let n_train = n - n_dev - n_test;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = order[..n_train].to_vec();
    let dev = order[n_train..n_train + n_dev].to_vec();
    let test = order[n_train + n_dev..].to_vec();
    let spec = SplitSpec { mode: SplitMode::Standard, seed, ratios };
    Ok(SplitBundle::assemble(dataset, spec, [train, dev, test]))
}

/// Uniform sample without replacement of `round(fraction * n)` triples (at
/// least one), kept in source order. `fraction == 1` returns the input.
///
/// Samples for different fractions under one seed are not nested.
pub fn subsample_fraction(train: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("fraction {fraction} outside (0, 1]")));
    }
    let n = train.len();
    if fraction == 1.0 || n == 0 {
        return Ok(train.clone());
    }
    let amount = round_half_up(fraction * n as f64).clamp(1, n);
    let mut picked = index::sample(&mut ChaCha8Rng::seed_from_u64(seed), n, amount).into_vec();
    picked.sort_unstable();
    Ok(train.select(&picked))
}

/// Holds out a random `test_pair_fraction` of the distinct keys of `mode`;
/// every triple carrying a held-out key goes to test, the rest is split into
/// train/dev by `dev_fraction`.
pub fn zero_shot_split(
    dataset: &Dataset,
    mode: SplitMode,
    test_pair_fraction: f64,
    dev_fraction: f64,
    seed: u64,
) -> Result<SplitBundle> {
    if mode == SplitMode::Standard {
        return Err(Error::invalid("zero_shot_split needs an unseen_* mode"));
    }
    for (name, f) in [("test_pair_fraction", test_pair_fraction), ("dev_fraction", dev_fraction)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("{name} = {f} outside (0, 1)")));
        }
    }
    let keys: Vec<String> = dataset.iter().map(|t| mode.key(t).expect("zero-shot mode")).collect();
    let mut distinct: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for k in &keys {
        if seen.insert(k.as_str()) {
            distinct.push(k);
        }
    }
    if distinct.len() < 2 {
        return Err(Error::invalid(format!("{mode} split needs at least 2 distinct keys, found {}", distinct.len())));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let n_test_keys = round_half_up(test_pair_fraction * distinct.len() as f64).clamp(1, distinct.len() - 1);
    let test_keys: HashSet<&str> = distinct[..n_test_keys].iter().copied().collect();

    let mut test = Vec::new();
    let mut rest = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if test_keys.contains(k.as_str()) {
            test.push(i);
        } else {
            rest.push(i);
        }
    }
    rest.shuffle(&mut rng);
    let n_dev = round_half_up(dev_fraction * rest.len() as f64).min(rest.len());
    let dev = rest[..n_dev].to_vec();
    let train = rest[n_dev..].to_vec();

    let spec = SplitSpec { mode, seed, ratios: [1.0 - test_pair_fraction, dev_fraction, test_pair_fraction] };
    Ok(SplitBundle::assemble(dataset, spec, [train, dev, test]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::tests::triple;

    fn numbered(n: usize) -> Dataset {
        (0..n).map(|i| triple(&format!("s{}", i % 7), &format!("r{}", i % 3), "o")).collect()
    }

    #[test]
    fn standard_sizes() {
        let b = standard_split(&numbered(100), [0.70, 0.15, 0.15], 7).unwrap();
        assert_eq!((b.train.len(), b.dev.len(), b.test.len()), (70, 15, 15));
        let b = standard_split(&numbered(101), [0.70, 0.15, 0.15], 7).unwrap();
        assert_eq!((b.train.len(), b.dev.len(), b.test.len()), (71, 15, 15));
    }

    #[test]
    fn standard_is_deterministic_partition() {
        let ds = numbered(200);
        let a = standard_split(&ds, [0.70, 0.15, 0.15], 3).unwrap();
        let b = standard_split(&ds, [0.70, 0.15, 0.15], 3).unwrap();
        assert_eq!(a.manifest(), b.manifest());
        let c = standard_split(&ds, [0.70, 0.15, 0.15], 4).unwrap();
        assert_ne!(a.manifest(), c.manifest());
        let mut all: Vec<usize> =
            a.train_indices.iter().chain(&a.dev_indices).chain(&a.test_indices).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn standard_rejects_bad_input() {
        assert!(standard_split(&numbered(2), [0.70, 0.15, 0.15], 0).is_err());
        assert!(standard_split(&numbered(10), [0.75, 0.15, 0.15], 0).is_err());
        assert!(standard_split(&numbered(10), [1.0, 0.0, 0.0], 0).is_err());
    }

    #[test]
    fn manifest_round_trip() {
        let ds = numbered(50);
        let a = zero_shot_split(&ds, SplitMode::UnseenSubjectRelation, 0.15, 0.15, 1).unwrap();
        let json = serde_json::to_string(&a.manifest()).unwrap();
        let back: SplitManifest = serde_json::from_str(&json).unwrap();
        let b = SplitBundle::from_manifest(&ds, &back).unwrap();
        assert_eq!(b.test, a.test);
        assert_eq!(b.train, a.train);

        let mut broken = back.clone();
        broken.test.push(broken.train[0]);
        assert!(SplitBundle::from_manifest(&ds, &broken).is_err());
        broken.test.pop();
        broken.test.pop();
        assert!(SplitBundle::from_manifest(&ds, &broken).is_err());
    }

    #[test]
    fn subsample_sizes() {
        let ds = numbered(1000);
        assert_eq!(subsample_fraction(&ds, 1.0, 5).unwrap(), ds);
        assert_eq!(subsample_fraction(&ds, 0.01, 5).unwrap().len(), 10);
        assert_eq!(subsample_fraction(&numbered(10), 0.01, 5).unwrap().len(), 1);
        assert_eq!(subsample_fraction(&ds, 0.01, 5).unwrap(), subsample_fraction(&ds, 0.01, 5).unwrap());
        assert!(subsample_fraction(&ds, 0.0, 5).is_err());
        assert!(subsample_fraction(&ds, 1.5, 5).is_err());
    }

    #[test]
    fn rounding_rule() {
        assert_eq!(round_half_up(0.10 * 333321.0), 33332);
        assert_eq!(round_half_up(0.15 * 50.0), 8);
        assert_eq!(round_half_up(0.15 * 101.0), 15);
        assert_eq!(round_half_up(2.4999), 2);
    }

    #[test]
    fn two_key_subject_split() {
        let mut triples = Vec::new();
        for _ in 0..5 {
            triples.push(triple("man", "riding", "horse"));
            triples.push(triple("kid", "flying", "kite"));
        }
        let ds = Dataset::new(triples);
        for seed in 0..10 {
            let b = zero_shot_split(&ds, SplitMode::UnseenSubjectRelation, 0.5, 0.2, seed).unwrap();
            assert_eq!(b.test.len(), 5);
            let held = &b.test.triples()[0].relation;
            assert!(b.test.iter().all(|t| &t.relation == held));
            assert!(b.train.iter().chain(b.dev.iter()).all(|t| &t.relation != held));
        }
    }

    #[test]
    fn two_relation_split() {
        let ds: Dataset = ["on", "under", "on", "under", "on"].iter().map(|r| triple("a", r, "b")).collect();
        let b = zero_shot_split(&ds, SplitMode::UnseenRelation, 0.5, 0.3, 9).unwrap();
        assert_eq!(b.test.relation_vocab().len(), 1);
        let held = b.test.relation_vocab().name(0).to_string();
        assert_eq!(b.test.len(), ds.iter().filter(|t| t.relation == held).count());
    }

    #[test]
    fn zero_shot_errors() {
        let ds: Dataset = (0..4).map(|_| triple("a", "on", "b")).collect();
        assert!(zero_shot_split(&ds, SplitMode::UnseenRelation, 0.5, 0.3, 0).is_err());
        let ds = numbered(20);
        assert!(zero_shot_split(&ds, SplitMode::UnseenRelation, 1.0, 0.3, 0).is_err());
        assert!(zero_shot_split(&ds, SplitMode::Standard, 0.5, 0.3, 0).is_err());
    }

    #[test]
    fn fifty_keys_hold_out_eight() {
        // 5000 triples over 50 (subject, relation) keys.
        let ds: Dataset =
            (0..5000).map(|i| triple(&format!("s{}", i % 10), &format!("r{}", (i / 10) % 5), "o")).collect();
        let b = zero_shot_split(&ds, SplitMode::UnseenSubjectRelation, 0.15, 0.15, 11).unwrap();
        let [train, dev, test] = b.key_sets();
        assert_eq!(test.len(), 8);
        assert!(test.is_disjoint(&train));
        assert!(test.is_disjoint(&dev));
        assert_eq!(b.train.len() + b.dev.len() + b.test.len(), 5000);
    }
}
