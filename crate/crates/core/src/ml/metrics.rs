use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with unsafe (1) as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl std::iter::Sum for Confusion {
    fn sum<I: Iterator<Item = Confusion>>(iter: I) -> Confusion {
        iter.fold(Confusion::default(), |a, b| a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Metrics {
    pub fn from_confusion(confusion: Confusion) -> Metrics {
        let precision = ratio(confusion.tp, confusion.tp + confusion.fp);
        let recall = ratio(confusion.tp, confusion.tp + confusion.fn_);
        Metrics {
            precision,
            recall,
            f1: f1_score(precision, recall),
            confusion,
        }
    }
}

pub fn confusion(predictions: &[u8], truths: &[u8]) -> Result<Confusion> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(Error::InvalidData(format!(
            "need equally long, non-empty predictions and truths (got {} and {})",
            predictions.len(),
            truths.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p, t) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fn_ += 1,
            _ => return Err(Error::InvalidData(format!("labels must be 0 or 1, got {p} and {t}"))),
        }
    }
    Ok(c)
}

/// Precision, recall and F1 of `predictions` against `truths`; zero
/// denominators yield 0.
pub fn compute_metrics(predictions: &[u8], truths: &[u8]) -> Result<Metrics> {
    Ok(Metrics::from_confusion(confusion(predictions, truths)?))
}
