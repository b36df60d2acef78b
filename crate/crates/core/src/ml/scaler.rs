use serde::{Deserialize, Serialize};

/// Per-feature standardisation to zero mean and unit variance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>], indices: &[usize]) -> Scaler {
        let p = rows[indices[0]].len();
        let n = indices.len() as f64;
        let mut mean = vec![0.0; p];
        for &i in indices {
            for (m, v) in mean.iter_mut().zip(&rows[i]) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; p];
        for &i in indices {
            for ((s, v), m) in var.iter_mut().zip(&rows[i]).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                // constant columns are only centred
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Scaler { mean, std }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}
