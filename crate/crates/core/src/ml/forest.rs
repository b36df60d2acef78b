use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{self, Criterion, Tree, TreeParams};
use super::Hyperparams;

/// Bagged Gini trees. Tree `t` uses stream `t` of `seed`.
pub fn fit(rows: &[Vec<f64>], targets: &[f64], indices: &[usize], hp: &Hyperparams, seed: u64) -> Vec<Tree> {
    let p = rows[indices[0]].len();
    let max_features = hp
        .forest_max_features
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .min(p);
    let params = TreeParams {
        max_features: Some(max_features),
        ..hp.tree
    };
    (0..hp.forest_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let sample: Vec<usize> = if hp.forest_bootstrap {
                (0..indices.len())
                    .map(|_| indices[rng.gen_range(0..indices.len())])
                    .collect()
            } else {
                indices.to_vec()
            };
            tree::grow(rows, targets, &sample, Criterion::Gini, &params, &mut rng, |ix| {
                tree::mean_of(targets, ix)
            })
        })
        .collect()
}
