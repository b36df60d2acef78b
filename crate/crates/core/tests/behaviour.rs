//! Worked examples for features, learners, evaluation and selection.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdc_select::features::{extract_features, extract_suite, FeatureVector, Stats, FEATURE_NAMES};
use sdc_select::generator::{generate_tests, GeneratorConfig};
use sdc_select::ml::eval::{cross_validate_folds, stratified_folds};
use sdc_select::ml::tree::TreeParams;
use sdc_select::ml::{
    benchmark_all, compute_metrics, cross_validate, evaluate_split, train, Confusion, Dataset, Family, Hyperparams,
    Metrics, TrainedModel,
};
use sdc_select::oracle::{apply, label_suite, label_test, SimulationConfig};
use sdc_select::road::{Label, Point3, RoadTest};
use sdc_select::selection::{evaluate_cost_effectiveness, predict_tests, random_baseline};
use sdc_select::Error;

fn names(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("f{i}")).collect()
}

fn accuracy(model: &TrainedModel, ds: &Dataset) -> f64 {
    let hits = ds
        .rows()
        .iter()
        .zip(ds.labels())
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    hits as f64 / ds.len() as f64
}

/// Threshold-labelled rows: unsafe iff feature 1 exceeds 0.6.
fn threshold_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
    let labels = rows.iter().map(|r| u8::from(r[1] > 0.6)).collect();
    Dataset::new(rows, labels, names(4)).unwrap()
}

#[test]
fn straight_road_features() {
    let t = RoadTest::new("s", vec![Point3::flat(0.0, 0.0), Point3::flat(100.0, 0.0)], 4.0).unwrap();
    let f = extract_features(&t).unwrap();
    assert!((f.direct_distance - 100.0).abs() < 1e-9 && (f.road_distance - 100.0).abs() < 1e-9);
    assert_eq!((f.num_straights, f.num_l_turns, f.num_r_turns), (1, 0, 0));
    assert_eq!(f.total_angle, 0.0);
    assert_eq!((f.angle, f.pivot_off), (Stats::default(), Stats::default()));
}

#[test]
fn quarter_arc_features() {
    let pts = (0..=31)
        .map(|i| {
            let a = PI / 2.0 * i as f64 / 31.0;
            Point3::flat(50.0 + 20.0 * a.sin(), 80.0 - 20.0 * a.cos())
        })
        .collect();
    let f = extract_features(&RoadTest::new("arc", pts, 4.0).unwrap()).unwrap();
    assert_eq!((f.num_l_turns, f.num_r_turns), (1, 0));
    assert!((f.road_distance - 10.0 * PI).abs() / (10.0 * PI) < 1e-3);
    assert!((f.direct_distance - 20.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(f.angle.std, 0.0);
    assert!((f.angle.median - 90.0).abs() < 0.9 && (f.pivot_off.median - 20.0).abs() < 0.2);
}

#[test]
fn suite_extraction_keeps_labels_and_order() {
    let cfg = SimulationConfig::default();
    let mut tests = generate_tests(&GeneratorConfig::new(3, 2)).unwrap();
    for t in &mut tests {
        let r = label_test(t, &cfg).unwrap();
        apply(t, &r, &cfg);
    }
    let rows: Vec<FeatureVector> = extract_suite(&tests).into_iter().map(Result::unwrap).collect();
    for (t, f) in tests.iter().zip(&rows) {
        assert_eq!((&t.test_id, t.label, t.sim_time), (&f.test_id, f.label, f.sim_time));
    }
    let again: Vec<FeatureVector> = extract_suite(&tests).into_iter().map(Result::unwrap).collect();
    assert_eq!(rows, again);
    assert!(extract_suite(&[]).is_empty());
}

#[test]
fn zero_curvature_generates_straights() {
    let cfg = GeneratorConfig {
        kappa_bound: 0.0,
        ..GeneratorConfig::new(10, 4)
    };
    for t in generate_tests(&cfg).unwrap() {
        let f = extract_features(&t).unwrap();
        assert_eq!(
            (f.num_l_turns, f.num_r_turns, f.num_straights),
            (0, 0, 1),
            "{}",
            t.test_id
        );
    }
}

#[test]
fn default_generator_yields_both_classes() {
    let tests = generate_tests(&GeneratorConfig::new(500, 0)).unwrap();
    let labels: Vec<Label> = label_suite(&tests, &SimulationConfig::with_rf(1.5))
        .into_iter()
        .map(|r| r.unwrap().label)
        .collect();
    assert!(labels.contains(&Label::Safe) && labels.contains(&Label::Unsafe));
}

#[test]
fn linear_models_separate_a_margin() {
    // 200 points at least 0.5 from the line x + y = 1, i.e. a margin of 1
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    while rows.len() < 200 {
        let (x, y): (f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let dist = (x + y - 1.0) / 2f64.sqrt();
        if dist.abs() >= 0.5 {
            rows.push(vec![x, y]);
            labels.push(u8::from(dist > 0.0));
        }
    }
    let ds = Dataset::new(rows, labels, names(2)).unwrap();
    for family in [Family::LogisticRegression, Family::Svm] {
        let m = train(family, &ds, &Hyperparams::default(), 0).unwrap();
        assert!(accuracy(&m, &ds) >= 0.99, "{family}: {}", accuracy(&m, &ds));
    }
}

#[test]
fn unlimited_tree_fits_consistent_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..3).map(|_| rng.gen_range(0..20) as f64).collect())
        .collect();
    let mut seen = std::collections::HashMap::new();
    let labels: Vec<u8> = rows
        .iter()
        .map(|r| {
            *seen
                .entry(format!("{r:?}"))
                .or_insert_with(|| u8::from(rng.gen_bool(0.5)))
        })
        .collect();
    let ds = Dataset::new(rows, labels, names(3)).unwrap();
    let hp = Hyperparams {
        tree: TreeParams {
            max_depth: None,
            ..Default::default()
        },
        ..Default::default()
    };
    assert_eq!(accuracy(&train(Family::DecisionTree, &ds, &hp, 0).unwrap(), &ds), 1.0);
}

#[test]
fn learnable_split_is_perfect() {
    let ds = threshold_dataset(200, 3);
    let m = evaluate_split(Family::DecisionTree, &ds, &Hyperparams::default(), 0.8, 0).unwrap();
    assert_eq!(m.f1, 1.0);
    assert_eq!(m.confusion.total(), 40);
}

#[test]
fn pooled_aggregate_sums_fold_counts() {
    let ds = threshold_dataset(150, 5);
    let hp = Hyperparams::default();
    let r = cross_validate(Family::NaiveBayes, &ds, &hp, 10, 7).unwrap();
    assert_eq!(r.folds.len(), 10);
    let summed: Confusion = r.folds.iter().map(|m| m.confusion).sum();
    assert_eq!(r.aggregate, Metrics::from_confusion(summed));
    assert_eq!(summed.total(), 150);
    assert!(matches!(
        cross_validate(Family::NaiveBayes, &ds.subset(&[0, 1, 2]), &hp, 10, 0),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn benchmark_ranks_a_tree_first_on_threshold_data() {
    let ds = threshold_dataset(300, 11);
    let hp = Hyperparams::default();
    let report = benchmark_all(&ds, &hp, 10, 0).unwrap();
    assert_eq!(report.ranking.len(), 6);
    assert!(report.best().is_tree_based(), "{}", report.best());
    for w in report.ranking.windows(2) {
        assert!(w[0].aggregate.f1 >= w[1].aggregate.f1);
    }
    // every family saw the same folds
    let folds = stratified_folds(ds.labels(), 10, 0).unwrap();
    for r in &report.ranking {
        assert_eq!(r, &cross_validate_folds(r.family, &ds, &hp, &folds, 0).unwrap());
    }
}

#[test]
fn majority_class_predictions_score_zero() {
    let m = compute_metrics(&[0, 0, 0, 0], &[0, 0, 0, 0]).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
}

fn suite(n: usize) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    (0..n)
        .map(|i| {
            let road: f64 = rng.gen_range(50.0..500.0);
            let label = if road > 320.0 { Label::Unsafe } else { Label::Safe };
            FeatureVector {
                test_id: format!("t{i:04}"),
                direct_distance: rng.gen_range(10.0..50.0),
                road_distance: road,
                num_l_turns: rng.gen_range(0..4),
                num_r_turns: rng.gen_range(0..4),
                num_straights: 1,
                total_angle: rng.gen_range(0.0..300.0),
                angle: Stats::of(&[rng.gen_range(10.0..90.0)]),
                pivot_off: Stats::of(&[rng.gen_range(10.0..90.0)]),
                sim_time: Some(road / 15.0),
                label,
            }
        })
        .collect()
}

#[test]
fn predictions_follow_the_learned_rule() {
    let rows = suite(120);
    let ds = Dataset::from_features(&rows).unwrap();
    let model = train(Family::DecisionTree, &ds, &Hyperparams::default(), 0).unwrap();
    let preds = predict_tests(&model, &rows).unwrap();
    for (p, f) in preds.iter().zip(&rows) {
        assert_eq!(p.test_id, f.test_id);
        assert_eq!(p.label, f.label);
    }
    assert!(predict_tests(&model, &[]).unwrap().is_empty());
    let constant = TrainedModel::constant_unsafe(FEATURE_NAMES.iter().map(|s| s.to_string()).collect());
    assert!(predict_tests(&constant, &rows)
        .unwrap()
        .iter()
        .all(|p| p.label == Label::Unsafe));
    let narrow = TrainedModel::constant_unsafe(names(3));
    assert!(matches!(predict_tests(&narrow, &rows), Err(Error::InvalidData(_))));
}

#[test]
fn random_baseline_is_uniform() {
    let ids: Vec<String> = (0..4).map(|i| format!("t{i}")).collect();
    let mut counts = [0usize; 4];
    for seed in 0..10_000u64 {
        let pick = random_baseline(&ids, 1, seed).unwrap();
        counts[ids.iter().position(|i| *i == pick[0]).unwrap()] += 1;
    }
    for c in counts {
        assert!((c as f64 / 10_000.0 - 0.25).abs() <= 0.02, "{counts:?}");
    }
}

#[test]
fn all_unsafe_equal_times_gives_equal_ce() {
    let mut rows = suite(60);
    for f in &mut rows {
        f.label = Label::Unsafe;
        f.sim_time = Some(25.0);
    }
    // a second class is needed to train; flip one row that lands in training
    rows[0].label = Label::Safe;
    let report = evaluate_cost_effectiveness(&rows, &Family::ALL, &Hyperparams::default(), 5, 3, 0).unwrap();
    for r in &report.rows {
        assert!((r.guided - 1.0 / 25.0).abs() < 1e-12, "{}", r.family);
        assert!((r.baseline - 1.0 / 25.0).abs() < 1e-12, "{}", r.family);
    }
}

#[test]
fn guided_selection_wins_on_learnable_suite() {
    let rows = suite(200);
    let report = evaluate_cost_effectiveness(&rows, &Family::ALL, &Hyperparams::default(), 10, 20, 3).unwrap();
    assert_eq!(report.rows.len(), 6);
    for r in &report.rows {
        assert_eq!(r.guided_runs.len(), 20);
    }
    assert!(report.guided_wins() >= 4, "{:?}", report.rows);
}
