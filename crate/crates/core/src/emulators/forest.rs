//! Bagged CART regression trees.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or `min_leaf` stops them.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features examined per split.
    pub max_features: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_leaf: 2,
            max_features: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.min_leaf == 0 || self.max_features == 0 {
            return Err(Error::InvalidParameter(
                "random forest needs n_trees, min_leaf and max_features >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction of the summed squared error.
    pub gain: f64,
}

/// Best variance-reduction split of `idx` over `features`, with thresholds at
/// midpoints between consecutive distinct values.
pub fn best_split(
    x: &DMatrix<f64>,
    y: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<SplitChoice> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&i| y[i]).sum();
    let parent = total * total / n as f64;
    let mut best: Option<SplitChoice> = None;
    let mut order = idx.to_vec();
    for &f in features {
        order.sort_by(|&a, &b| x[(a, f)].total_cmp(&x[(b, f)]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += y[order[k]];
            let (lo, hi) = (x[(order[k], f)], x[(order[k + 1], f)]);
            let n_left = k + 1;
            if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64;
            let gain = score - parent;
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitChoice { feature: f, threshold: 0.5 * (lo + hi), gain });
            }
        }
    }
    best
}

struct Builder<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let value = idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64;
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn feature_subset(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
        // draw features in random order, keeping the first `max_features`
        // that are not constant on this node
        let mut all: Vec<usize> = (0..self.x.ncols()).collect();
        all.shuffle(rng);
        let mut chosen = Vec::with_capacity(self.params.max_features);
        for f in all {
            let first = self.x[(idx[0], f)];
            if idx.iter().any(|&i| self.x[(i, f)] != first) {
                chosen.push(f);
                if chosen.len() == self.params.max_features {
                    break;
                }
            }
        }
        chosen
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let y0 = self.y[idx[0]];
        let pure = idx.iter().all(|&i| self.y[i] == y0);
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < 2 * self.params.min_leaf {
            return self.leaf(idx);
        }
        let features = self.feature_subset(idx, rng);
        let Some(split) = best_split(self.x, self.y, idx, &features, self.params.min_leaf) else {
            return self.leaf(idx);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[(i, split.feature)] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { value: f64::NAN });
        let left = self.grow(&left_idx, depth + 1, rng);
        let right = self.grow(&right_idx, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        at
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: &ForestParams) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("random forest rows"));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        params.validate()?;
        let n = x.nrows();
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = rng::substream(params.seed, &[0xF0_4E57, t as u64]);
                let mut idx: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                idx.sort_unstable();
                let mut b = Builder { x, y, params, nodes: Vec::new() };
                b.grow(&idx, 0, &mut rng);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Forest { trees })
    }

    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}
