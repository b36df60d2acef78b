//! Linear support vector machine: hinge loss with L2 penalty minimised by
//! full-batch subgradient descent on a fixed decaying step schedule.

use serde::{Deserialize, Serialize};

use super::logistic::sigmoid;
use super::scaler::Scaler;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub l2: f64,
    pub epochs: usize,
    pub initial_step: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            l2: 1e-3,
            epochs: 1000,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub scaler: Scaler,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn objective(w: &[f64], b: f64, x: &[Vec<f64>], sign: &[f64], l2: f64) -> f64 {
    let hinge: f64 = x
        .iter()
        .zip(sign)
        .map(|(xi, s)| (1.0 - s * (w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b)).max(0.0))
        .sum();
    0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>() + hinge / x.len() as f64
}

impl LinearSvm {
    /// Keeps the iterate with the lowest objective, since subgradient steps
    /// are not monotone.
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], indices: &[usize], params: &SvmParams) -> LinearSvm {
        let scaler = Scaler::fit(rows, indices);
        let x: Vec<Vec<f64>> = indices.iter().map(|&i| scaler.transform(&rows[i])).collect();
        let sign: Vec<f64> = indices
            .iter()
            .map(|&i| if labels[i] == 1 { 1.0 } else { -1.0 })
            .collect();
        let n = x.len() as f64;
        let p = x[0].len();

        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut best = (objective(&w, b, &x, &sign, params.l2), w.clone(), b);
        for t in 0..params.epochs {
            let step = params.initial_step / (1.0 + params.initial_step * params.l2 * t as f64);
            let mut gw: Vec<f64> = w.iter().map(|v| params.l2 * v).collect();
            let mut gb = 0.0;
            for (xi, &s) in x.iter().zip(&sign) {
                let margin = s * (w.iter().zip(xi).map(|(a, v)| a * v).sum::<f64>() + b);
                if margin < 1.0 {
                    for (g, v) in gw.iter_mut().zip(xi) {
                        *g -= s * v / n;
                    }
                    gb -= s / n;
                }
            }
            for (wi, g) in w.iter_mut().zip(&gw) {
                *wi -= step * g;
            }
            b -= step * gb;
            let obj = objective(&w, b, &x, &sign, params.l2);
            if obj < best.0 {
                best = (obj, w.clone(), b);
            }
        }
        LinearSvm {
            scaler,
            weights: best.1,
            bias: best.2,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let z = self.scaler.transform(x);
        self.weights.iter().zip(&z).map(|(a, v)| a * v).sum::<f64>() + self.bias
    }

    /// Logistic squashing of the margin; 0.5 on the separating hyperplane.
    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
