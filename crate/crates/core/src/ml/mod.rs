//! Classifier families, training and evaluation.

pub mod boosting;
pub mod eval;
pub mod forest;
pub mod importance;
pub mod logistic;
pub mod metrics;
pub mod naive_bayes;
pub mod scaler;
pub mod svm;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES};
use crate::road::Label;

pub use eval::{benchmark_all, cross_validate, evaluate_split, CvReport, EvaluationReport};
pub use importance::{gini_importance, ImportanceReport};
pub use metrics::{compute_metrics, f1_score, Confusion, Metrics};

use boosting::Boosting;
use logistic::{LogisticModel, LogisticParams};
use naive_bayes::GaussianNb;
use scaler::Scaler;
use svm::{LinearSvm, SvmParams};
use tree::{Criterion, Tree, TreeParams};

/// Scores at or above this value predict unsafe.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    NaiveBayes,
    LogisticRegression,
    RandomForest,
    GradientBoosting,
    Svm,
    DecisionTree,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::NaiveBayes,
        Family::LogisticRegression,
        Family::RandomForest,
        Family::GradientBoosting,
        Family::Svm,
        Family::DecisionTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::NaiveBayes => "naive_bayes",
            Family::LogisticRegression => "logistic_regression",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
            Family::Svm => "svm",
            Family::DecisionTree => "decision_tree",
        }
    }

    pub fn is_tree_based(self) -> bool {
        matches!(
            self,
            Family::RandomForest | Family::GradientBoosting | Family::DecisionTree
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnsupportedModel(s.to_string()))
    }
}

/// Binary-labelled feature rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Dataset> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidData(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let arity = feature_names.len();
        for (i, (row, &label)) in rows.iter().zip(&labels).enumerate() {
            if row.len() != arity {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} features, expected {arity}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("row {i} has non-finite feature {v}")));
            }
            if label > 1 {
                return Err(Error::InvalidData(format!(
                    "row {i} has label {label}, expected 0 or 1"
                )));
            }
        }
        Ok(Dataset {
            rows,
            labels,
            feature_names,
        })
    }

    /// Uses the standard feature order; every vector must be labelled.
    pub fn from_features(features: &[FeatureVector]) -> Result<Dataset> {
        let mut rows = Vec::with_capacity(features.len());
        let mut labels = Vec::with_capacity(features.len());
        for fv in features {
            let label = match fv.label {
                Label::Safe => 0,
                Label::Unsafe => 1,
                Label::Unlabeled => {
                    return Err(Error::InvalidData(format!("{} is unlabeled", fv.test_id)));
                }
            };
            rows.push(fv.values().to_vec());
            labels.push(label);
        }
        Dataset::new(rows, labels, FEATURE_NAMES.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// `[safe, unsafe]` counts over `indices`.
    pub fn class_counts(&self, indices: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &i in indices {
            c[self.labels[i] as usize] += 1;
        }
        c
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparams {
    /// Shared by the single tree and the forest members.
    pub tree: TreeParams,
    pub forest_trees: usize,
    pub forest_bootstrap: bool,
    /// Features tried per forest split; `None` means `ceil(sqrt(p))`.
    pub forest_max_features: Option<usize>,
    pub boosting_rounds: usize,
    pub boosting_depth: usize,
    pub learning_rate: f64,
    pub logistic: LogisticParams,
    pub svm: SvmParams,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            tree: TreeParams::default(),
            forest_trees: 100,
            forest_bootstrap: true,
            forest_max_features: None,
            boosting_rounds: 100,
            boosting_depth: 3,
            learning_rate: 0.1,
            logistic: LogisticParams::default(),
            svm: SvmParams::default(),
        }
    }
}

impl Hyperparams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.tree.max_depth == Some(0) || self.boosting_depth == 0 {
            return bad("tree depth must be at least 1");
        }
        if self.forest_trees == 0 || self.boosting_rounds == 0 {
            return bad("ensembles need at least one tree");
        }
        if self.forest_max_features == Some(0) || self.tree.max_features == Some(0) {
            return bad("max_features must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning rate must lie in (0, 1]");
        }
        if !(self.logistic.l2 >= 0.0 && self.svm.l2 > 0.0) {
            return bad("L2 strength must be non-negative (positive for svm)");
        }
        if self.svm.initial_step.is_nan()
            || self.svm.initial_step <= 0.0
            || self.svm.epochs == 0
            || self.logistic.max_iter == 0
        {
            return bad("optimiser schedule must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes(GaussianNb),
    Logistic(LogisticModel),
    Svm(LinearSvm),
    Tree(Tree),
    Forest { trees: Vec<Tree> },
    Boosting(Boosting),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub family: Family,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
}

impl TrainedModel {
    /// A model that scores every input as certainly unsafe.
    pub fn constant_unsafe(feature_names: Vec<String>) -> TrainedModel {
        TrainedModel {
            family: Family::DecisionTree,
            feature_names,
            params: ModelParams::Tree(Tree::constant(1.0)),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Standardisation applied before scoring, `None` for tree families
    /// and naive Bayes.
    pub fn scaler(&self) -> Option<&Scaler> {
        match &self.params {
            ModelParams::Logistic(m) => Some(&m.scaler),
            ModelParams::Svm(m) => Some(&m.scaler),
            _ => None,
        }
    }

    /// Probability-like unsafe score in `[0, 1]`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let s = match &self.params {
            ModelParams::NaiveBayes(m) => m.score(x),
            ModelParams::Logistic(m) => m.score(x),
            ModelParams::Svm(m) => m.score(x),
            ModelParams::Tree(t) => t.predict(x),
            ModelParams::Forest { trees } => trees.iter().map(|t| t.predict(x)).sum::<f64>() / trees.len() as f64,
            ModelParams::Boosting(b) => b.score(x),
        };
        if s.is_nan() {
            DECISION_THRESHOLD
        } else {
            s.clamp(0.0, 1.0)
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) >= DECISION_THRESHOLD)
    }

    pub fn check_arity(&self, n: usize) -> Result<()> {
        if n != self.n_features() {
            return Err(Error::InvalidData(format!(
                "model expects {} features, got {n}",
                self.n_features()
            )));
        }
        Ok(())
    }
}

/// SplitMix64 mix of a base seed and a stream index, for per-fold and
/// per-repetition seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn train(family: Family, dataset: &Dataset, hyperparams: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    let all: Vec<usize> = (0..dataset.len()).collect();
    train_on(family, dataset, &all, hyperparams, seed)
}

/// Trains on the rows at `indices` only.
pub fn train_on(
    family: Family,
    dataset: &Dataset,
    indices: &[usize],
    hp: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    hp.check()?;
    let [safe, unsafe_] = dataset.class_counts(indices);
    if safe == 0 || unsafe_ == 0 {
        return Err(Error::DegenerateTraining(format!(
            "{family} needs both classes, got {safe} safe and {unsafe_} unsafe rows"
        )));
    }
    let rows = dataset.rows();
    let labels = dataset.labels();
    let targets: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = match family {
        Family::NaiveBayes => ModelParams::NaiveBayes(GaussianNb::fit(rows, labels, indices)),
        Family::LogisticRegression => ModelParams::Logistic(LogisticModel::fit(rows, labels, indices, &hp.logistic)),
        Family::Svm => ModelParams::Svm(LinearSvm::fit(rows, labels, indices, &hp.svm)),
        Family::DecisionTree => ModelParams::Tree(tree::grow(
            rows,
            &targets,
            indices,
            Criterion::Gini,
            &hp.tree,
            &mut rng,
            |ix| tree::mean_of(&targets, ix),
        )),
        Family::RandomForest => ModelParams::Forest {
            trees: forest::fit(rows, &targets, indices, hp, seed),
        },
        Family::GradientBoosting => ModelParams::Boosting(Boosting::fit(rows, &targets, indices, hp, &mut rng)),
    };
    Ok(TrainedModel {
        family,
        feature_names: dataset.feature_names().to_vec(),
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
            assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
        }
        assert!("knn".parse::<Family>().is_err());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![1.0]], vec![0, 1], names(1)).is_err());
        assert!(Dataset::new(vec![vec![1.0, 2.0]], vec![0], names(1)).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![0], names(1)).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![2], names(1)).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![1], names(1)).is_ok());
    }

    #[test]
    fn single_class_is_degenerate() {
        let ds = Dataset::new(vec![vec![1.0], vec![2.0]], vec![0, 0], names(1)).unwrap();
        for f in Family::ALL {
            assert!(matches!(
                train(f, &ds, &Hyperparams::default(), 0),
                Err(Error::DegenerateTraining(_))
            ));
        }
    }

    #[test]
    fn constant_model_scores_one() {
        let m = TrainedModel::constant_unsafe(names(3));
        assert_eq!(m.score(&[0.0, 1.0, 2.0]), 1.0);
        assert_eq!(m.predict(&[0.0, 1.0, 2.0]), 1);
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0 || i > 20)).collect();
        let ds = Dataset::new(rows, labels, names(2)).unwrap();
        let hp = Hyperparams {
            forest_trees: 5,
            boosting_rounds: 5,
            ..Default::default()
        };
        for f in Family::ALL {
            let m = train(f, &ds, &hp, 3).unwrap();
            for x in [[1e300, -1e300], [0.0, 0.0], [-5.0, 1e6]] {
                let s = m.score(&x);
                assert!((0.0..=1.0).contains(&s), "{f} gave {s}");
            }
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 0), derive_seed(1, 0));
    }
}
