//! L2-regularised logistic regression fitted by full-batch gradient
//! descent with backtracking line search.

use serde::{Deserialize, Serialize};

use super::scaler::Scaler;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Mean log-loss of `(weights, bias)` over standardised rows.
pub fn log_loss(weights: &[f64], bias: f64, rows: &[Vec<f64>], labels: &[u8]) -> f64 {
    rows.iter()
        .zip(labels)
        .map(|(x, &y)| {
            let z = dot(weights, x) + bias;
            softplus(z) - y as f64 * z
        })
        .sum::<f64>()
        / rows.len() as f64
}

/// Gradient of [`log_loss`] with respect to the weights and the bias.
pub fn log_loss_gradient(weights: &[f64], bias: f64, rows: &[Vec<f64>], labels: &[u8]) -> (Vec<f64>, f64) {
    let n = rows.len() as f64;
    let mut gw = vec![0.0; weights.len()];
    let mut gb = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let r = sigmoid(dot(weights, x) + bias) - y as f64;
        for (g, v) in gw.iter_mut().zip(x) {
            *g += r * v;
        }
        gb += r;
    }
    gw.iter_mut().for_each(|g| *g /= n);
    (gw, gb / n)
}

/// Training objective: log-loss plus `l2 / 2 * |w|^2` (bias unpenalised).
pub fn objective(weights: &[f64], bias: f64, rows: &[Vec<f64>], labels: &[u8], l2: f64) -> f64 {
    log_loss(weights, bias, rows, labels) + 0.5 * l2 * dot(weights, weights)
}

pub fn objective_gradient(weights: &[f64], bias: f64, rows: &[Vec<f64>], labels: &[u8], l2: f64) -> (Vec<f64>, f64) {
    let (mut gw, gb) = log_loss_gradient(weights, bias, rows, labels);
    for (g, w) in gw.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (gw, gb)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub scaler: Scaler,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-3,
            max_iter: 10_000,
            tolerance: 1e-6,
        }
    }
}

impl LogisticModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], indices: &[usize], params: &LogisticParams) -> LogisticModel {
        let scaler = Scaler::fit(rows, indices);
        let x: Vec<Vec<f64>> = indices.iter().map(|&i| scaler.transform(&rows[i])).collect();
        let y: Vec<u8> = indices.iter().map(|&i| labels[i]).collect();
        let p = x[0].len();

        let mut w = vec![0.0; p];
        let mut b = 0.0;
        let mut step = 1.0;
        let mut loss = objective(&w, b, &x, &y, params.l2);
        let mut iterations = 0;
        while iterations < params.max_iter {
            let (gw, gb) = objective_gradient(&w, b, &x, &y, params.l2);
            let norm2 = dot(&gw, &gw) + gb * gb;
            if norm2.sqrt() < params.tolerance {
                break;
            }
            iterations += 1;
            loop {
                let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - step * g).collect();
                let cand_b = b - step * gb;
                let cand_loss = objective(&cand_w, cand_b, &x, &y, params.l2);
                if cand_loss <= loss - 0.5 * step * norm2 || step < 1e-12 {
                    w = cand_w;
                    b = cand_b;
                    loss = cand_loss;
                    break;
                }
                step *= 0.5;
            }
            step = (step * 2.0).min(64.0);
        }
        LogisticModel {
            scaler,
            weights: w,
            bias: b,
            iterations,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, &self.scaler.transform(x)) + self.bias
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}
