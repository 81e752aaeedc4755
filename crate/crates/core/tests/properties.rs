//! Randomized invariants across module boundaries.

mod common;

use std::collections::HashSet;
use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spatial_relation::dataset::{standard_split, zero_shot_split, BoundingBox, Dataset, Entity, SplitMode, Triple};
use spatial_relation::embeddings::{read_embeddings, EmbeddingKind};
use spatial_relation::evaluation::topk_accuracy;
use spatial_relation::fusion::{fuse, project_prior};
use spatial_relation::prior::{read_prior_file, CooccurrencePrior, Prediction, PriorProvider, PriorRecord};
use spatial_relation::scores::ScoreDist;
use spatial_relation::vocab::RelationVocab;

const SUBJECTS: [&str; 6] = ["man", "dog", "cup", "tree", "red car", "lamp"];
const OBJECTS: [&str; 5] = ["table", "floor", "wall", "sky", "horse"];
const RELATIONS: [&str; 7] = ["on", "under", "next to", "above", "has", "holding", "in front of"];

fn triple(i: usize, (s, r, o): (usize, usize, usize)) -> Triple {
    let b = BoundingBox::new(0.5, 0.5, 0.1, 0.1).unwrap();
    Triple::new(
        format!("img{i}"),
        Entity::new(SUBJECTS[s], b, None).unwrap(),
        RELATIONS[r],
        Entity::new(OBJECTS[o], b, None).unwrap(),
        None,
    )
    .unwrap()
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec((0..SUBJECTS.len(), 0..RELATIONS.len(), 0..OBJECTS.len()), 10..200)
        .prop_map(|spec| Dataset::new(spec.into_iter().enumerate().map(|(i, t)| triple(i, t)).collect()))
}

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n).prop_map(|v| {
        let total: f64 = v.iter().sum();
        if total == 0.0 {
            vec![1.0 / v.len() as f64; v.len()]
        } else {
            v.into_iter().map(|x| x / total).collect()
        }
    })
}

fn vocab(n: usize) -> Arc<RelationVocab> {
    Arc::new(RelationVocab::from_names((0..n).map(|i| format!("r{i}"))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_shot_splits_never_leak(data in dataset(), mode_ix in 0..3usize, seed in any::<u64>()) {
        let mode = SplitMode::ZERO_SHOT[mode_ix];
        let distinct: HashSet<String> = data.iter().filter_map(|t| mode.key(t)).collect();
        prop_assume!(distinct.len() >= 2);
        let split = zero_shot_split(&data, mode, 0.15, 0.15, seed).unwrap();
        let [train, dev, test] = split.key_sets();
        prop_assert!(!test.is_empty());
        prop_assert!(train.is_disjoint(&test));
        prop_assert!(dev.is_disjoint(&test));

        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.dev_indices).chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());

        let again = zero_shot_split(&data, mode, 0.15, 0.15, seed).unwrap();
        prop_assert_eq!(again.manifest(), split.manifest());
    }

    #[test]
    fn standard_split_partitions(data in dataset(), seed in any::<u64>()) {
        let split = standard_split(&data, [0.7, 0.15, 0.15], seed).unwrap();
        let mut all: Vec<usize> = split.train_indices.iter().chain(&split.dev_indices).chain(&split.test_indices).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        prop_assert_eq!(split.train.len() + split.dev.len() + split.test.len(), data.len());
    }

    #[test]
    fn fusion_stays_between_its_inputs(
        (f, p) in (1..12usize).prop_flat_map(|n| (distribution(n), distribution(n))),
        lambda in 0.0..10.0f64,
    ) {
        let v = vocab(f.len());
        let ff = ScoreDist::new(Arc::clone(&v), f.clone(), true).unwrap();
        let prior = ScoreDist::new(Arc::clone(&v), p.clone(), true).unwrap();
        let fused = fuse(&ff, &prior, lambda).unwrap();
        prop_assert!((fused.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..f.len() {
            let (lo, hi) = (f[i].min(p[i]), f[i].max(p[i]));
            prop_assert!(fused.scores[i] >= lo - 1e-12 && fused.scores[i] <= hi + 1e-12);
        }
        let zero = fuse(&ff, &prior, 0.0).unwrap();
        prop_assert_eq!(zero.scores, f);
    }

    #[test]
    fn raising_lambda_moves_toward_prior(
        (f, p) in (2..8usize).prop_flat_map(|n| (distribution(n), distribution(n))),
        a in 0.0..5.0f64,
        b in 0.0..5.0f64,
    ) {
        // Raising λ can only move the fused mass toward the prior.
        let (lo, hi) = (a.min(b), a.max(b));
        let v = vocab(f.len());
        let ff = ScoreDist::new(Arc::clone(&v), f.clone(), true).unwrap();
        let prior = ScoreDist::new(Arc::clone(&v), p.clone(), true).unwrap();
        let x = fuse(&ff, &prior, lo).unwrap();
        let y = fuse(&ff, &prior, hi).unwrap();
        for ((sx, sy), target) in x.scores.iter().zip(&y.scores).zip(&p) {
            prop_assert!((sy - target).abs() <= (sx - target).abs() + 1e-12);
        }
    }

    #[test]
    fn projection_matches_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = common::random_projection_case(&mut rng, 12);
        let got = project_prior(&case.record, Arc::clone(&case.vocab), &case.table).unwrap();
        let want = common::oracle_project(&case.names, &case.tokens, case.table.dim(), &case.record);
        prop_assert!(got.normalized);
        for (g, w) in got.scores.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9, "{:?} vs {:?}", got.scores, want);
        }
    }

    #[test]
    fn cooc_score_grows_with_its_own_evidence(data in dataset(), extra in (0..SUBJECTS.len(), 0..RELATIONS.len(), 0..OBJECTS.len())) {
        let before = CooccurrencePrior::fit(&data, 0.1).unwrap();
        let (s, r, o) = extra;
        prop_assume!(before.vocab().contains(RELATIONS[r]));
        let mut triples = data.triples().to_vec();
        triples.push(triple(triples.len(), extra));
        let after = CooccurrencePrior::fit(&Dataset::new(triples), 0.1).unwrap();
        prop_assert_eq!(before.vocab(), after.vocab());
        let i = before.vocab().index_of(RELATIONS[r]).unwrap();
        let (x, y) = (before.scores(SUBJECTS[s], OBJECTS[o]), after.scores(SUBJECTS[s], OBJECTS[o]));
        prop_assert!(y[i] >= x[i] - 1e-12, "{} -> {}", x[i], y[i]);
        prop_assert!(x.iter().chain(&y).all(|v| *v > 0.0 && *v <= 1.0));
    }

    #[test]
    fn cooc_records_are_valid(data in dataset(), s in 0..SUBJECTS.len(), o in 0..OBJECTS.len(), k in 1..10usize) {
        let prior = CooccurrencePrior::fit(&data, 0.1).unwrap().with_top_k(k);
        let record = prior.query(SUBJECTS[s], OBJECTS[o]).unwrap();
        prop_assert!(record.validate().is_ok());
        prop_assert_eq!(record.predictions.len(), k.min(prior.vocab().len()));
    }

    #[test]
    fn record_validation_matches_its_contract(
        preds in prop::collection::vec((prop::sample::select(vec!["on", "under", "", " ", "next to", "on"]), prop_oneof![
            4 => 0.0..1.0f64,
            1 => Just(-0.5),
            1 => Just(f64::NAN),
            1 => Just(f64::INFINITY),
        ]), 0..6),
        sort in any::<bool>(),
    ) {
        let mut predictions: Vec<Prediction> = preds.into_iter().map(|(r, s)| Prediction { relation: r.to_string(), score: s }).collect();
        if sort {
            predictions.sort_by(|a, b| b.score.total_cmp(&a.score));
        }
        let scores: Vec<f64> = predictions.iter().map(|p| p.score).collect();
        let names: Vec<&str> = predictions.iter().map(|p| p.relation.as_str()).collect();
        let expect_ok = scores.iter().all(|s| s.is_finite() && *s >= 0.0)
            && scores.windows(2).all(|w| w[0] >= w[1])
            && names.iter().all(|n| !n.trim().is_empty())
            && names.iter().collect::<HashSet<_>>().len() == names.len();
        let record = PriorRecord { subject: "a".into(), object: "b".into(), predictions };
        prop_assert_eq!(record.validate().is_ok(), expect_ok);

        // The same record through the file reader: accepted exactly when valid.
        // NaN and infinities do not survive JSON, so only finite records are written.
        if scores.iter().all(|s| s.is_finite()) {
            let line = serde_json::to_string(&record).unwrap();
            prop_assert_eq!(read_prior_file(Cursor::new(line), "fuzz", 20).is_ok(), expect_ok);
        }
    }

    #[test]
    fn prior_reader_never_panics(text in "\\PC{0,200}") {
        let _ = read_prior_file(Cursor::new(text), "fuzz", 20);
    }

    #[test]
    fn topk_accuracy_is_monotone_in_k(
        rows in (2..10usize).prop_flat_map(|n| prop::collection::vec((distribution(n), 0..n), 1..30)),
    ) {
        let n = rows[0].0.len();
        let v = vocab(n);
        let preds: Vec<ScoreDist> = rows.iter().map(|(s, _)| ScoreDist::new(Arc::clone(&v), s.clone(), true).unwrap()).collect();
        let golds: Vec<String> = rows.iter().map(|(_, g)| format!("r{g}")).collect();
        let curve: Vec<f64> = (1..=n).map(|k| topk_accuracy(&preds, &golds, k).unwrap()).collect();
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]), "{curve:?}");
        prop_assert_eq!(curve[n - 1], 1.0);
        for p in &preds {
            for k in 1..n {
                prop_assert_eq!(&p.top_k(k)[..], &p.top_k(k + 1)[..k]);
            }
        }
    }
}

/// GloVe text with `lines` entries over `distinct` tokens; repeated tokens
/// get a different vector so "first wins" is observable.
fn glove_text(lines: usize, distinct: usize, dim: usize) -> String {
    let mut out = String::with_capacity(lines * dim * 8);
    for i in 0..lines {
        let token = i % distinct;
        out.push_str(&format!("tok{token}"));
        for d in 0..dim {
            out.push_str(&format!(" {}", (i * dim + d) as f64 / 1000.0));
        }
        out.push('\n');
    }
    out
}

fn check_glove_load(lines: usize, distinct: usize, dim: usize) {
    let text = glove_text(lines, distinct, dim);
    let (table, report) = read_embeddings(Cursor::new(text), "glove", None, EmbeddingKind::Word).unwrap();
    assert_eq!(table.dim(), dim);
    assert_eq!(table.len(), distinct);
    assert_eq!(report.lines, lines);
    assert_eq!(report.entries, distinct);
    assert_eq!(report.duplicates, lines - distinct);
    let last = distinct - 1;
    assert_eq!(table.get(&format!("tok{last}")).unwrap()[0], (last * dim) as f64 / 1000.0);
}

#[test]
fn large_glove_load_with_duplicates() {
    check_glove_load(60_000, 50_000, 50);
}

#[test]
#[ignore = "loads a 400k-line, 300-dimensional table"]
fn full_size_glove_load() {
    check_glove_load(400_000, 400_000, 300);
}
