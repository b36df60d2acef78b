use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes over two classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl GaussianNb {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], indices: &[usize]) -> GaussianNb {
        let p = rows[indices[0]].len();
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; p], vec![0.0; p]];
        for &i in indices {
            let c = labels[i] as usize;
            count[c] += 1;
            for (m, v) in mean[c].iter_mut().zip(&rows[i]) {
                *m += v;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
        }
        let mut var = [vec![0.0; p], vec![0.0; p]];
        for &i in indices {
            let c = labels[i] as usize;
            for ((s, v), m) in var[c].iter_mut().zip(&rows[i]).zip(&mean[c]) {
                *s += (v - m).powi(2);
            }
        }
        for c in 0..2 {
            var[c]
                .iter_mut()
                .for_each(|s| *s = (*s / count[c] as f64).max(VARIANCE_FLOOR));
        }
        let n = indices.len() as f64;
        GaussianNb {
            log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
            mean,
            var,
        }
    }

    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        self.log_prior[c]
            + x.iter()
                .zip(&self.mean[c])
                .zip(&self.var[c])
                .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s))
                .sum::<f64>()
    }

    /// Posterior probability of the unsafe class.
    pub fn score(&self, x: &[f64]) -> f64 {
        let diff = self.log_joint(0, x) - self.log_joint(1, x);
        1.0 / (1.0 + diff.exp())
    }
}
