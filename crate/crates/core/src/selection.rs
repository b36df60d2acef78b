//! Model-guided test selection and its cost-effectiveness.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};
use crate::ml::eval::stratified_split;
use crate::ml::{derive_seed, train_on, Dataset, Family, Hyperparams, TrainedModel};
use crate::road::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub test_id: String,
    pub score: f64,
    pub label: Label,
}

/// Scores every feature vector, keeping the input order. Stored labels are
/// ignored.
pub fn predict_tests(model: &TrainedModel, features: &[FeatureVector]) -> Result<Vec<Prediction>> {
    model.check_arity(NUM_FEATURES)?;
    Ok(features
        .iter()
        .map(|fv| {
            let x = fv.values();
            let score = model.score(&x);
            Prediction {
                test_id: fv.test_id.clone(),
                score,
                label: if model.predict(&x) == 1 {
                    Label::Unsafe
                } else {
                    Label::Safe
                },
            }
        })
        .collect())
}

/// The `k` highest-scoring tests, ties broken by test id. Returns all
/// candidates when there are fewer than `k`.
pub fn select_top_k(scored: &[(String, f64)], k: usize) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut v = scored.to_vec();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    Ok(v)
}

/// `k` tests drawn uniformly without replacement.
pub fn random_baseline(test_ids: &[String], k: usize, seed: u64) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = k.min(test_ids.len());
    Ok(index::sample(&mut rng, test_ids.len(), k)
        .into_iter()
        .map(|i| test_ids[i].clone())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<(String, f64)>,
    pub unsafe_found: usize,
    pub total_sim_time: f64,
    /// Unsafe tests found per simulated second.
    pub cost_effectiveness: f64,
}

pub fn cost_effectiveness(unsafe_found: usize, total_sim_time: f64) -> Result<f64> {
    if !(total_sim_time > 0.0 && total_sim_time.is_finite()) {
        return Err(Error::InvalidData(format!(
            "total simulation time must be positive, got {total_sim_time}"
        )));
    }
    Ok(unsafe_found as f64 / total_sim_time)
}

/// Per-mille rendering rounded half-up to one decimal, e.g. `4.0‰`.
pub fn format_per_mille(ce: f64) -> String {
    // the nudge keeps binary representation error from rounding x.x5 down
    let tenths = (ce * 10_000.0 + 0.5 + 1e-9).floor();
    format!("{:.1}‰", tenths / 10.0)
}

/// Replays the stored labels and times of the selected tests.
fn replay(
    features: &[FeatureVector],
    selected: Vec<(String, f64)>,
    by_id: &dyn Fn(&str) -> usize,
) -> Result<SelectionResult> {
    let mut unsafe_found = 0;
    let mut total = 0.0;
    for (id, _) in &selected {
        let fv = &features[by_id(id)];
        if fv.label == Label::Unsafe {
            unsafe_found += 1;
        }
        total += fv.sim_time.unwrap_or(0.0);
    }
    Ok(SelectionResult {
        cost_effectiveness: cost_effectiveness(unsafe_found, total)?,
        selected,
        unsafe_found,
        total_sim_time: total,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CePair {
    pub family: Family,
    /// Mean over repetitions.
    pub guided: f64,
    pub baseline: f64,
    pub guided_runs: Vec<f64>,
    pub baseline_runs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CeReport {
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// Size of each held-out pool.
    pub held_out: usize,
    pub rows: Vec<CePair>,
}

impl CeReport {
    pub fn guided_wins(&self) -> usize {
        self.rows.iter().filter(|r| r.guided >= r.baseline).count()
    }
}

/// Paired guided/random cost-effectiveness per family.
///
/// Repetition `r` splits 80/20 with `derive_seed(seed, r)`; every family is
/// trained on the same 80% and selects `k` tests from the same held-out
/// 20%, while its random baseline draws from that pool with its own seed.
pub fn evaluate_cost_effectiveness(
    features: &[FeatureVector],
    families: &[Family],
    hyperparams: &Hyperparams,
    k: usize,
    repetitions: usize,
    seed: u64,
) -> Result<CeReport> {
    if k == 0 || repetitions == 0 {
        return Err(Error::InvalidConfig("k and repetitions must be at least 1".into()));
    }
    if let Some(fv) = features
        .iter()
        .find(|fv| !fv.sim_time.is_some_and(|t| t > 0.0 && t.is_finite()))
    {
        return Err(Error::InvalidData(format!("{} has no usable sim_time", fv.test_id)));
    }
    let dataset = Dataset::from_features(features)?;
    let by_id = |id: &str| {
        features
            .binary_search_by(|fv| fv.test_id.as_str().cmp(id))
            .ok()
            .or_else(|| features.iter().position(|fv| fv.test_id == id))
            .expect("selected ids come from the feature list")
    };

    let runs = (0..repetitions)
        .into_par_iter()
        .map(|r| {
            let split_seed = derive_seed(seed, r as u64);
            let (train, test) = stratified_split(dataset.labels(), 0.8, split_seed)?;
            if test.is_empty() {
                return Err(Error::InvalidData("held-out pool is empty".into()));
            }
            let pool: Vec<String> = test.iter().map(|&i| features[i].test_id.clone()).collect();
            families
                .iter()
                .enumerate()
                .map(|(fi, &family)| {
                    let model = train_on(
                        family,
                        &dataset,
                        &train,
                        hyperparams,
                        derive_seed(split_seed, fi as u64),
                    )?;
                    let scored: Vec<(String, f64)> = test
                        .iter()
                        .map(|&i| (features[i].test_id.clone(), model.score(&dataset.rows()[i])))
                        .collect();
                    let guided = replay(features, select_top_k(&scored, k)?, &by_id)?;
                    let picks = random_baseline(&pool, k, derive_seed(split_seed, 1000 + fi as u64))?;
                    let baseline = replay(features, picks.into_iter().map(|id| (id, 0.0)).collect(), &by_id)?;
                    Ok((guided.cost_effectiveness, baseline.cost_effectiveness))
                })
                .collect::<Result<Vec<_>>>()
                .map(|pairs| (test.len(), pairs))
        })
        .collect::<Result<Vec<_>>>()?;

    let held_out = runs[0].0;
    let rows = families
        .iter()
        .enumerate()
        .map(|(fi, &family)| {
            let guided_runs: Vec<f64> = runs.iter().map(|(_, p)| p[fi].0).collect();
            let baseline_runs: Vec<f64> = runs.iter().map(|(_, p)| p[fi].1).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            CePair {
                family,
                guided: mean(&guided_runs),
                baseline: mean(&baseline_runs),
                guided_runs,
                baseline_runs,
            }
        })
        .collect();
    Ok(CeReport {
        k,
        repetitions,
        seed,
        held_out,
        rows,
    })
}
