//! Gradient-boosted regression trees on logistic loss, with per-split gain
//! recording for feature-importance accounting.
//!
//! Each round fits a depth-limited tree to the current gradient/hessian pair
//! (g = p - y, h = p(1-p)); a split's gain is
//!   1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda))
//! and leaves carry `learning_rate * -G/(H+lambda)`. Columns are pre-sorted
//! once and trees grow level by level, so a round costs O(depth * features *
//! samples).

use super::tree::{Node, Tree};
use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    pub min_leaf: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { n_rounds: 100, learning_rate: 0.1, max_depth: 3, lambda: 1.0, min_leaf: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    /// Mean logistic loss on the training set after each round.
    pub round_losses: Vec<f64>,
}

impl GbtModel {
    /// Summed leaf scores (log-odds scale).
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.eval(x)).sum()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }

    /// +1 when the female-class probability exceeds 0.5, else -1.
    pub fn label(&self, x: &[f64]) -> i8 {
        if self.probability(x) > 0.5 {
            1
        } else {
            -1
        }
    }

    /// Total split gain per feature across all trees (unnormalized).
    pub fn feature_gains(&self) -> Vec<f64> {
        let mut gains = vec![0.0; self.n_features];
        for tree in &self.trees {
            tree.accumulate_gains(&mut gains);
        }
        gains
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

struct FrontierNode {
    /// Arena slot this node must finalize into.
    slot: usize,
    g_sum: f64,
    h_sum: f64,
    count: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Deterministic preference: higher gain, ties to the lower feature
    /// index then lower threshold, regardless of scan or thread order.
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(b) => {
                self.gain > b.gain + GAIN_EPS
                    || ((self.gain - b.gain).abs() <= GAIN_EPS
                        && (self.feature, self.threshold) < (b.feature, b.threshold))
            }
        }
    }
}

/// One feature column, pre-sorted once per training run.
struct SortedColumn {
    rows: Vec<u32>,
    values: Vec<f64>,
}

const SETTLED: u32 = u32::MAX;

fn grow_tree(
    x: &[Vec<f64>],
    sorted_columns: &[SortedColumn],
    grad: &[f64],
    hess: &[f64],
    params: &GbtParams,
) -> Tree {
    let n = x.len();
    let lambda = params.lambda;
    let leaf_value = |g: f64, h: f64| params.learning_rate * (-g / (h + lambda));

    let mut nodes: Vec<Node> = vec![Node::Leaf { value: 0.0 }];
    let mut row_node: Vec<u32> = vec![0; n];
    let mut frontier = vec![FrontierNode {
        slot: 0,
        g_sum: grad.iter().sum(),
        h_sum: hess.iter().sum(),
        count: n,
    }];

    for _depth in 0..params.max_depth {
        if frontier.is_empty() {
            break;
        }
        let m = frontier.len();
        // Scan features in parallel; per-node bests merge with a total order
        // so the result is identical no matter the thread count. Scan
        // buffers live in the fold state to avoid per-feature allocation.
        struct ScanState {
            best: Vec<Option<Candidate>>,
            left_g: Vec<f64>,
            left_h: Vec<f64>,
            left_n: Vec<usize>,
            prev: Vec<f64>,
        }
        let best: Vec<Option<Candidate>> = sorted_columns
            .par_iter()
            .enumerate()
            .fold(
                || ScanState {
                    best: vec![None; m],
                    left_g: vec![0.0; m],
                    left_h: vec![0.0; m],
                    left_n: vec![0; m],
                    prev: vec![0.0; m],
                },
                |mut s, (feature, column)| {
                    s.left_g.iter_mut().for_each(|v| *v = 0.0);
                    s.left_h.iter_mut().for_each(|v| *v = 0.0);
                    s.left_n.iter_mut().for_each(|v| *v = 0);
                    for (&row, &value) in column.rows.iter().zip(&column.values) {
                        let a = row_node[row as usize];
                        if a == SETTLED {
                            continue;
                        }
                        let a = a as usize;
                        let node = &frontier[a];
                        if s.left_n[a] > 0 && value > s.prev[a] {
                            let threshold = (s.prev[a] + value) / 2.0;
                            // Midpoint must actually separate the two values.
                            if threshold > s.prev[a] && threshold <= value {
                                let n_left = s.left_n[a];
                                let n_right = node.count - n_left;
                                if n_left >= params.min_leaf && n_right >= params.min_leaf {
                                    let gl = s.left_g[a];
                                    let hl = s.left_h[a];
                                    let gr = node.g_sum - gl;
                                    let hr = node.h_sum - hl;
                                    let gain = 0.5
                                        * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda)
                                            - node.g_sum * node.g_sum / (node.h_sum + lambda));
                                    if gain > GAIN_EPS {
                                        let cand = Candidate { gain, feature, threshold };
                                        if cand.beats(&s.best[a]) {
                                            s.best[a] = Some(cand);
                                        }
                                    }
                                }
                            }
                        }
                        s.left_g[a] += grad[row as usize];
                        s.left_h[a] += hess[row as usize];
                        s.left_n[a] += 1;
                        s.prev[a] = value;
                    }
                    s
                },
            )
            .map(|s| s.best)
            .reduce(
                || vec![None; m],
                |mut acc, per_chunk| {
                    for (slot, cand) in acc.iter_mut().zip(per_chunk) {
                        if let Some(c) = cand {
                            if c.beats(slot) {
                                *slot = Some(c);
                            }
                        }
                    }
                    acc
                },
            );

        // Materialize splits; everything else settles into a leaf.
        let mut next_frontier = Vec::new();
        let mut actions: Vec<Option<(Candidate, u32, u32)>> = Vec::with_capacity(m);
        for (a, node) in frontier.iter().enumerate() {
            match best[a] {
                Some(cand) => {
                    let left_slot = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    let right_slot = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[node.slot] = Node::Split {
                        feature: cand.feature,
                        threshold: cand.threshold,
                        gain: cand.gain,
                        left: left_slot,
                        right: right_slot,
                    };
                    let left_idx = next_frontier.len() as u32;
                    next_frontier.push(FrontierNode { slot: left_slot, g_sum: 0.0, h_sum: 0.0, count: 0 });
                    let right_idx = next_frontier.len() as u32;
                    next_frontier.push(FrontierNode { slot: right_slot, g_sum: 0.0, h_sum: 0.0, count: 0 });
                    actions.push(Some((cand, left_idx, right_idx)));
                }
                None => {
                    nodes[node.slot] = Node::Leaf { value: leaf_value(node.g_sum, node.h_sum) };
                    actions.push(None);
                }
            }
        }
        for row in 0..n {
            let a = row_node[row];
            if a == SETTLED {
                continue;
            }
            match &actions[a as usize] {
                None => row_node[row] = SETTLED,
                Some((cand, left_idx, right_idx)) => {
                    let child = if x[row][cand.feature] < cand.threshold { *left_idx } else { *right_idx };
                    row_node[row] = child;
                    let node = &mut next_frontier[child as usize];
                    node.g_sum += grad[row];
                    node.h_sum += hess[row];
                    node.count += 1;
                }
            }
        }
        frontier = next_frontier;
    }
    // Depth limit reached: settle the remaining frontier.
    for node in &frontier {
        nodes[node.slot] = Node::Leaf { value: leaf_value(node.g_sum, node.h_sum) };
    }
    Tree { nodes }
}

/// Train on +-1 labels. Deterministic; `_seed` is accepted for interface
/// uniformity but the exact greedy fit draws no randomness.
pub fn train(x: &[Vec<f64>], y: &[i8], params: GbtParams, _seed: u64) -> Result<GbtModel> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Training(format!("need >= 2 labeled samples, got {}", x.len())));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    if params.n_rounds == 0 {
        return Err(Error::Argument("n_rounds must be >= 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::Argument(format!(
            "learning_rate must be in (0,1], got {}",
            params.learning_rate
        )));
    }
    if params.lambda < 0.0 {
        return Err(Error::Argument(format!("lambda must be >= 0, got {}", params.lambda)));
    }
    let n = x.len();
    let d = x[0].len();
    let y01: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();

    let sorted_columns: Vec<SortedColumn> = (0..d)
        .into_par_iter()
        .map(|f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| {
                x[a as usize][f].partial_cmp(&x[b as usize][f]).expect("finite features")
            });
            let values = idx.iter().map(|&r| x[r as usize][f]).collect();
            SortedColumn { rows: idx, values }
        })
        .collect();

    let mut scores = vec![0.0f64; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut round_losses = Vec::with_capacity(params.n_rounds);
    let mut grad = vec![0.0f64; n];
    let mut hess = vec![0.0f64; n];
    for _round in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = p - y01[i];
            hess[i] = p * (1.0 - p);
        }
        let tree = grow_tree(x, &sorted_columns, &grad, &hess, &params);
        for i in 0..n {
            scores[i] += tree.eval(&x[i]);
        }
        trees.push(tree);
        let loss: f64 = (0..n)
            .map(|i| {
                let p = sigmoid(scores[i]).clamp(1e-15, 1.0 - 1e-15);
                -(y01[i] * p.ln() + (1.0 - y01[i]) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / n as f64;
        round_losses.push(loss);
    }
    Ok(GbtModel { trees, n_features: d, round_losses })
}
