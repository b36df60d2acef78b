//! CART trees: Gini-impurity classification trees and squared-error
//! regression trees, grown greedily with exhaustive threshold search.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Split criterion and, implicitly, the target type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    /// Targets are 0/1 labels.
    Gini,
    /// Targets are real values.
    SquaredError,
}

/// Gini impurity of a node with `n` rows of which `positives` are 1.
pub fn gini(n: usize, positives: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = positives / n as f64;
    2.0 * p * (1.0 - p)
}

fn squared_error(n: usize, sum: f64, sum_sq: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    (sum_sq / n as f64 - mean * mean).max(0.0)
}

#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn push(&mut self, y: f64) {
        self.n += 1;
        self.sum += y;
        self.sum_sq += y * y;
    }

    fn minus(&self, other: &Stats) -> Stats {
        Stats {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sum_sq: self.sum_sq - other.sum_sq,
        }
    }

    fn impurity(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::Gini => gini(self.n, self.sum),
            Criterion::SquaredError => squared_error(self.n, self.sum, self.sum_sq),
        }
    }
}

fn weighted_impurity(left: &Stats, right: &Stats, criterion: Criterion) -> f64 {
    let n = (left.n + right.n) as f64;
    (left.n as f64 * left.impurity(criterion) + right.n as f64 * right.impurity(criterion)) / n
}

/// Impurities closer than this count as equal, so rounding noise cannot
/// override the tie rule.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Best split of a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    /// Size-weighted impurity of the two children.
    pub impurity: f64,
}

/// Searches `features` for the split with the lowest weighted child
/// impurity. Thresholds are midpoints between consecutive distinct values;
/// ties go to the lowest feature index, then the lowest threshold.
pub fn best_split(
    rows: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    features: &[usize],
    criterion: Criterion,
) -> Option<Split> {
    if indices.len() < 2 {
        return None;
    }
    let mut total = Stats::default();
    for &i in indices {
        total.push(targets[i]);
    }
    let mut order: Vec<usize> = indices.to_vec();
    let mut sorted_features = features.to_vec();
    sorted_features.sort_unstable();

    let mut best: Option<Split> = None;
    for &f in &sorted_features {
        order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
        let mut left = Stats::default();
        for k in 0..order.len() - 1 {
            left.push(targets[order[k]]);
            let (lo, hi) = (rows[order[k]][f], rows[order[k + 1]][f]);
            if lo >= hi {
                continue;
            }
            let right = total.minus(&left);
            let impurity = weighted_impurity(&left, &right, criterion);
            if best.is_none_or(|b| impurity < b.impurity - TIE_TOLERANCE) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    impurity,
                });
            }
        }
    }
    best
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
        samples: usize,
        impurity: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        samples: usize,
        impurity: f64,
    },
}

impl Node {
    pub fn samples(&self) -> usize {
        match self {
            Node::Leaf { samples, .. } | Node::Split { samples, .. } => *samples,
        }
    }

    pub fn impurity(&self) -> f64 {
        match self {
            Node::Leaf { impurity, .. } | Node::Split { impurity, .. } => *impurity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// A single leaf returning `value` everywhere.
    pub fn constant(value: f64) -> Tree {
        Tree {
            nodes: vec![Node::Leaf {
                value,
                samples: 0,
                impurity: 0.0,
            }],
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Per-feature sum of `samples * impurity` decrease over split nodes.
    pub fn impurity_decrease(&self, n_features: usize) -> Vec<f64> {
        let mut credit = vec![0.0; n_features];
        for node in &self.nodes {
            if let Node::Split {
                feature,
                left,
                right,
                samples,
                impurity,
                ..
            } = node
            {
                let (l, r) = (&self.nodes[*left], &self.nodes[*right]);
                let decrease =
                    *samples as f64 * impurity - l.samples() as f64 * l.impurity() - r.samples() as f64 * r.impurity();
                credit[*feature] += decrease.max(0.0);
            }
        }
        credit
    }

    pub fn root_samples(&self) -> usize {
        self.nodes[0].samples()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(10),
            max_features: None,
            min_samples_split: 2,
        }
    }
}

/// Grows a tree on `indices` (repeats allowed, e.g. a bootstrap sample).
/// `leaf_value` computes the prediction stored in each leaf from the rows
/// that reach it.
pub fn grow<R: Rng, F: Fn(&[usize]) -> f64>(
    rows: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    criterion: Criterion,
    params: &TreeParams,
    rng: &mut R,
    leaf_value: F,
) -> Tree {
    let n_features = rows.first().map_or(0, |r| r.len());
    let mut nodes = Vec::new();
    let mut stack = vec![(indices.to_vec(), 0usize, None::<(usize, bool)>)];
    while let Some((idx, depth, parent)) = stack.pop() {
        let mut stats = Stats::default();
        for &i in &idx {
            stats.push(targets[i]);
        }
        let impurity = stats.impurity(criterion);
        let at = nodes.len();
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = at;
                } else {
                    *right = at;
                }
            }
        }

        let can_split = impurity > 0.0
            && idx.len() >= params.min_samples_split.max(2)
            && params.max_depth.is_none_or(|d| depth < d);
        let split = if can_split {
            let candidates: Vec<usize> = match params.max_features {
                Some(m) if m < n_features => index::sample(rng, n_features, m).into_vec(),
                _ => (0..n_features).collect(),
            };
            best_split(rows, targets, &idx, &candidates, criterion).or_else(|| {
                if candidates.len() < n_features {
                    let all: Vec<usize> = (0..n_features).collect();
                    best_split(rows, targets, &idx, &all, criterion)
                } else {
                    None
                }
            })
        } else {
            None
        };

        match split {
            Some(s) => {
                let (left, right): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| rows[i][s.feature] <= s.threshold);
                nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: usize::MAX,
                    right: usize::MAX,
                    samples: idx.len(),
                    impurity,
                });
                stack.push((right, depth + 1, Some((at, false))));
                stack.push((left, depth + 1, Some((at, true))));
            }
            None => nodes.push(Node::Leaf {
                value: leaf_value(&idx),
                samples: idx.len(),
                impurity,
            }),
        }
    }
    Tree { nodes }
}

/// Mean target of the rows, the leaf value of a classification tree.
pub fn mean_of(targets: &[f64], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        0.0
    } else {
        idx.iter().map(|&i| targets[i]).sum::<f64>() / idx.len() as f64
    }
}
