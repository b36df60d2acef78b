//! Hold-out and k-fold evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Confusion, Metrics};
use super::{derive_seed, train_on, Dataset, Family, Hyperparams, TrainedModel};
use crate::error::{Error, Result};

/// Row indices of each class, each list shuffled with `seed`.
fn shuffled_classes(labels: &[u8], seed: u64) -> [Vec<usize>; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        classes[l as usize].push(i);
    }
    for c in &mut classes {
        c.shuffle(&mut rng);
    }
    classes
}

/// Stratified split: `round(fraction * n_c)` rows of each class go to the
/// training part. Both parts are returned sorted.
pub fn stratified_split(labels: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction {fraction} must lie in (0, 1)"
        )));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in shuffled_classes(labels, seed) {
        let n_train = (fraction * class.len() as f64).round() as usize;
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// `k` stratified folds: each class is shuffled, the classes are
/// concatenated and rows are dealt to the folds in turn.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > labels.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} folds needs 2 <= k <= {} rows",
            labels.len()
        )));
    }
    let [safe, unsafe_] = shuffled_classes(labels, seed);
    let mut folds = vec![Vec::new(); k];
    for (j, i) in safe.into_iter().chain(unsafe_).enumerate() {
        folds[j % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

fn evaluate_model(model: &TrainedModel, dataset: &Dataset, indices: &[usize]) -> Confusion {
    let preds: Vec<u8> = indices.iter().map(|&i| model.predict(&dataset.rows()[i])).collect();
    let truths: Vec<u8> = indices.iter().map(|&i| dataset.labels()[i]).collect();
    super::metrics::confusion(&preds, &truths).unwrap_or_default()
}

/// Trains on a stratified `fraction` of the rows and scores the rest.
pub fn evaluate_split(
    family: Family,
    dataset: &Dataset,
    hyperparams: &Hyperparams,
    fraction: f64,
    seed: u64,
) -> Result<Metrics> {
    let (train, test) = stratified_split(dataset.labels(), fraction, seed)?;
    if test.is_empty() {
        return Err(Error::InvalidConfig("held-out part is empty".into()));
    }
    let model = train_on(family, dataset, &train, hyperparams, derive_seed(seed, 0))?;
    Ok(Metrics::from_confusion(evaluate_model(&model, dataset, &test)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub family: Family,
    pub folds: Vec<Metrics>,
    /// Metrics of the summed fold confusions.
    pub aggregate: Metrics,
}

pub fn cross_validate(
    family: Family,
    dataset: &Dataset,
    hyperparams: &Hyperparams,
    k: usize,
    seed: u64,
) -> Result<CvReport> {
    let folds = stratified_folds(dataset.labels(), k, seed)?;
    cross_validate_folds(family, dataset, hyperparams, &folds, seed)
}

/// Cross-validation over caller-supplied folds. Fold `j` trains with seed
/// `derive_seed(seed, j)`.
pub fn cross_validate_folds(
    family: Family,
    dataset: &Dataset,
    hyperparams: &Hyperparams,
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<CvReport> {
    let confusions = folds
        .par_iter()
        .enumerate()
        .map(|(j, test)| {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(o, _)| o != j)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let model = train_on(family, dataset, &train, hyperparams, derive_seed(seed, j as u64))?;
            Ok(evaluate_model(&model, dataset, test))
        })
        .collect::<Result<Vec<Confusion>>>()?;
    Ok(CvReport {
        family,
        folds: confusions.iter().map(|&c| Metrics::from_confusion(c)).collect(),
        aggregate: Metrics::from_confusion(confusions.into_iter().sum()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub k: usize,
    pub seed: u64,
    pub rows: usize,
    pub unsafe_rows: usize,
    /// Best family first.
    pub ranking: Vec<CvReport>,
}

impl EvaluationReport {
    pub fn best(&self) -> Family {
        self.ranking[0].family
    }
}

/// Cross-validates all six families on the same folds and ranks them by
/// F1, then precision, then name.
pub fn benchmark_all(dataset: &Dataset, hyperparams: &Hyperparams, k: usize, seed: u64) -> Result<EvaluationReport> {
    let folds = stratified_folds(dataset.labels(), k, seed)?;
    let mut ranking = Family::ALL
        .par_iter()
        .map(|&f| cross_validate_folds(f, dataset, hyperparams, &folds, seed))
        .collect::<Result<Vec<_>>>()?;
    ranking.sort_by(|a, b| {
        b.aggregate
            .f1
            .total_cmp(&a.aggregate.f1)
            .then(b.aggregate.precision.total_cmp(&a.aggregate.precision))
            .then(a.family.name().cmp(b.family.name()))
    });
    let all: Vec<usize> = (0..dataset.len()).collect();
    Ok(EvaluationReport {
        k,
        seed,
        rows: dataset.len(),
        unsafe_rows: dataset.class_counts(&all)[1],
        ranking,
    })
}
