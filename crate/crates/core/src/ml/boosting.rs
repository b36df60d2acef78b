//! Gradient boosting of regression trees on the logistic loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::tree::{self, Criterion, Tree, TreeParams};
use super::Hyperparams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boosting {
    /// Log-odds of the training prior.
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl Boosting {
    pub fn fit<R: Rng>(
        rows: &[Vec<f64>],
        targets: &[f64],
        indices: &[usize],
        hp: &Hyperparams,
        rng: &mut R,
    ) -> Boosting {
        let prior = tree::mean_of(targets, indices);
        let base = (prior / (1.0 - prior)).ln();
        let params = TreeParams {
            max_depth: Some(hp.boosting_depth),
            max_features: None,
            min_samples_split: 2,
        };
        let mut raw = vec![base; rows.len()];
        let mut residual = vec![0.0; rows.len()];
        let mut trees = Vec::with_capacity(hp.boosting_rounds);
        for _ in 0..hp.boosting_rounds {
            for &i in indices {
                residual[i] = targets[i] - sigmoid(raw[i]);
            }
            let t = tree::grow(rows, &residual, indices, Criterion::SquaredError, &params, rng, |ix| {
                // one Newton step on the logistic loss
                let (mut num, mut den) = (0.0, 0.0);
                for &i in ix {
                    let p = sigmoid(raw[i]);
                    num += residual[i];
                    den += p * (1.0 - p);
                }
                if den < 1e-12 {
                    0.0
                } else {
                    num / den
                }
            });
            for &i in indices {
                raw[i] += hp.learning_rate * t.predict(&rows[i]);
            }
            trees.push(t);
        }
        Boosting {
            base,
            learning_rate: hp.learning_rate,
            trees,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.base + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
