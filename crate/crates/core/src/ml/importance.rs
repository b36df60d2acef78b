use serde::{Deserialize, Serialize};

use super::{ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::ml::tree::Tree;

/// Mean decrease in impurity per feature, summing to 1 (or all zero when
/// the model never splits).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    pub importances: Vec<f64>,
}

impl ImportanceReport {
    /// Features ordered by decreasing importance, ties by name.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .zip(self.importances.iter().copied())
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }
}

fn tree_credit(tree: &Tree, p: usize) -> Vec<f64> {
    let n = tree.root_samples();
    let mut credit = tree.impurity_decrease(p);
    if n > 0 {
        credit.iter_mut().for_each(|c| *c /= n as f64);
    }
    credit
}

pub fn gini_importance(model: &TrainedModel) -> Result<ImportanceReport> {
    let p = model.n_features();
    let trees: Vec<&Tree> = match &model.params {
        ModelParams::Tree(t) => vec![t],
        ModelParams::Forest { trees } => trees.iter().collect(),
        ModelParams::Boosting(b) => b.trees.iter().collect(),
        _ => {
            return Err(Error::UnsupportedModel(format!(
                "{} has no impurity-based importance",
                model.family
            )))
        }
    };
    let mut total = vec![0.0; p];
    for t in &trees {
        for (acc, c) in total.iter_mut().zip(tree_credit(t, p)) {
            *acc += c;
        }
    }
    total.iter_mut().for_each(|v| *v /= trees.len().max(1) as f64);
    let sum: f64 = total.iter().sum();
    if sum > 0.0 {
        total.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(ImportanceReport {
        feature_names: model.feature_names.clone(),
        importances: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{train, Dataset, Family, Hyperparams};

    #[test]
    fn stump_gets_all_credit() {
        let rows = vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]];
        let ds = Dataset::new(rows, vec![0, 0, 1, 1], vec!["a".into(), "b".into()]).unwrap();
        let m = train(Family::DecisionTree, &ds, &Hyperparams::default(), 0).unwrap();
        let r = gini_importance(&m).unwrap();
        assert_eq!(r.importances, vec![1.0, 0.0]);
        assert_eq!(r.ranked()[0].0, "a");
    }

    #[test]
    fn constant_model_has_zero_importance() {
        let m = TrainedModel::constant_unsafe(vec!["a".into()]);
        assert_eq!(gini_importance(&m).unwrap().importances, vec![0.0]);
    }

    #[test]
    fn linear_families_are_unsupported() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 1], vec!["a".into()]).unwrap();
        let m = train(Family::NaiveBayes, &ds, &Hyperparams::default(), 0).unwrap();
        assert!(matches!(gini_importance(&m), Err(Error::UnsupportedModel(_))));
    }
}
