//! CART trees: Gini-impurity classification and weighted least-squares
//! regression, both over axis-aligned `x[feature] < threshold` splits.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values; a split is accepted only when its gain is strictly positive and
//! both children hold at least `min_leaf` samples. Ties between equal-gain
//! splits resolve to the lowest feature index, then the lowest threshold.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, gain: f64, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Binary tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Root split, if the tree has one.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first() {
            Some(Node::Split { feature, threshold, .. }) => Some((*feature, *threshold)),
            _ => None,
        }
    }

    /// Add every split's gain into `acc[feature]`.
    pub fn accumulate_gains(&self, acc: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                acc[*feature] += gain;
            }
        }
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeOptions {
    /// Maximum number of split levels below the root; `None` = unlimited.
    pub max_depth: Option<usize>,
    /// Minimum samples in each child of an accepted split.
    pub min_leaf: usize,
    /// Candidate features per split; `None` = all (random forests sample
    /// ceil(sqrt(d)) via the fitting RNG).
    pub features_per_split: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self { max_depth: None, min_leaf: 1, features_per_split: None }
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Shared greedy builder; `criterion` evaluates one node's best split over
/// the supplied candidate features.
trait SplitCriterion {
    /// Leaf prediction for the rows.
    fn leaf_value(&self, rows: &[usize]) -> f64;
    /// Gain of splitting `rows` (pre-sorted by the feature) at each boundary;
    /// returns the best boundary for this feature, if any.
    fn best_for_feature(
        &self,
        feature: usize,
        sorted_rows: &[usize],
        min_leaf: usize,
    ) -> Option<BestSplit>;
    /// Whether the node is already pure enough to stop.
    fn is_pure(&self, rows: &[usize]) -> bool;
}

struct Builder<'a, C: SplitCriterion> {
    x: &'a [Vec<f64>],
    criterion: C,
    opts: TreeOptions,
    n_features: usize,
    nodes: Vec<Node>,
}

impl<'a, C: SplitCriterion> Builder<'a, C> {
    fn candidate_features(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        match self.opts.features_per_split {
            None => (0..self.n_features).collect(),
            Some(k) => {
                let mut all: Vec<usize> = (0..self.n_features).collect();
                all.shuffle(rng);
                let mut picked: Vec<usize> = all.into_iter().take(k.max(1)).collect();
                picked.sort_unstable(); // ascending keeps the tie rule intact
                picked
            }
        }
    }

    fn build(&mut self, mut rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let make_leaf = |nodes: &mut Vec<Node>, value: f64| {
            nodes.push(Node::Leaf { value });
            nodes.len() - 1
        };
        let depth_ok = self.opts.max_depth.map_or(true, |d| depth < d);
        if !depth_ok || rows.len() < 2 * self.opts.min_leaf || self.criterion.is_pure(&rows) {
            let v = self.criterion.leaf_value(&rows);
            return make_leaf(&mut self.nodes, v);
        }

        let mut best: Option<BestSplit> = None;
        for feature in self.candidate_features(rng) {
            rows.sort_by(|&a, &b| {
                self.x[a][feature].partial_cmp(&self.x[b][feature]).expect("finite features")
            });
            if let Some(cand) = self.criterion.best_for_feature(feature, &rows, self.opts.min_leaf) {
                let better = match &best {
                    None => true,
                    Some(b) => cand.gain > b.gain + GAIN_EPS,
                };
                if better {
                    best = Some(cand);
                }
            }
        }

        let Some(split) = best else {
            let v = self.criterion.leaf_value(&rows);
            return make_leaf(&mut self.nodes, v);
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.x[r][split.feature] < split.threshold);
        // Reserve the split slot before recursing so node 0 stays the root.
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            gain: split.gain,
            left,
            right,
        };
        slot
    }
}

// ---------------------------------------------------------------------------
// Classification: weighted Gini impurity decrease
// ---------------------------------------------------------------------------

struct GiniCriterion<'a> {
    x: &'a [Vec<f64>],
    y: &'a [i8],
    w: &'a [f64],
}

impl GiniCriterion<'_> {
    fn class_weights(&self, rows: &[usize]) -> (f64, f64) {
        let mut pos = 0.0;
        let mut neg = 0.0;
        for &r in rows {
            if self.y[r] > 0 {
                pos += self.w[r];
            } else {
                neg += self.w[r];
            }
        }
        (neg, pos)
    }
}

/// Count-weighted Gini impurity mass: W * (1 - sum p_c^2) = W - (neg^2+pos^2)/W.
fn gini_mass(neg: f64, pos: f64) -> f64 {
    let total = neg + pos;
    if total <= 0.0 {
        return 0.0;
    }
    total - (neg * neg + pos * pos) / total
}

impl SplitCriterion for GiniCriterion<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let (neg, pos) = self.class_weights(rows);
        // Ties predict the negative (male) class.
        if pos > neg {
            1.0
        } else {
            -1.0
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        let (neg, pos) = self.class_weights(rows);
        neg == 0.0 || pos == 0.0
    }

    fn best_for_feature(
        &self,
        feature: usize,
        sorted_rows: &[usize],
        min_leaf: usize,
    ) -> Option<BestSplit> {
        let (total_neg, total_pos) = self.class_weights(sorted_rows);
        let parent = gini_mass(total_neg, total_pos);
        let mut left_neg = 0.0;
        let mut left_pos = 0.0;
        let mut best: Option<BestSplit> = None;
        for i in 0..sorted_rows.len() - 1 {
            let r = sorted_rows[i];
            if self.y[r] > 0 {
                left_pos += self.w[r];
            } else {
                left_neg += self.w[r];
            }
            let a = self.x[r][feature];
            let b = self.x[sorted_rows[i + 1]][feature];
            if a == b {
                continue;
            }
            let n_left = i + 1;
            let n_right = sorted_rows.len() - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let threshold = (a + b) / 2.0;
            if !(threshold > a && threshold <= b) {
                continue; // adjacent floats: midpoint cannot separate them
            }
            let gain = parent
                - gini_mass(left_neg, left_pos)
                - gini_mass(total_neg - left_neg, total_pos - left_pos);
            if gain > GAIN_EPS && best.as_ref().map_or(true, |b| gain > b.gain + GAIN_EPS) {
                best = Some(BestSplit { feature, threshold, gain });
            }
        }
        best
    }
}

/// Fit a classification tree on +-1 labels with per-sample weights.
pub fn fit_classification(
    x: &[Vec<f64>],
    y: &[i8],
    weights: &[f64],
    opts: TreeOptions,
    rng: &mut ChaCha8Rng,
) -> Tree {
    fit_classification_on(x, y, weights, (0..x.len()).collect(), opts, rng)
}

/// As [`fit_classification`], but over an explicit row multiset (bootstrap
/// resamples pass rows with repeats).
pub fn fit_classification_on(
    x: &[Vec<f64>],
    y: &[i8],
    weights: &[f64],
    rows: Vec<usize>,
    opts: TreeOptions,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n_features = x.first().map(|r| r.len()).unwrap_or(0);
    let mut builder = Builder {
        x,
        criterion: GiniCriterion { x, y, w: weights },
        opts,
        n_features,
        nodes: Vec::new(),
    };
    builder.build(rows, 0, rng);
    Tree { nodes: builder.nodes }
}

// ---------------------------------------------------------------------------
// Regression: weighted squared-error reduction
// ---------------------------------------------------------------------------

struct VarianceCriterion<'a> {
    x: &'a [Vec<f64>],
    z: &'a [f64],
    w: &'a [f64],
}

impl VarianceCriterion<'_> {
    fn sums(&self, rows: &[usize]) -> (f64, f64, f64) {
        let mut sw = 0.0;
        let mut swz = 0.0;
        let mut swzz = 0.0;
        for &r in rows {
            sw += self.w[r];
            swz += self.w[r] * self.z[r];
            swzz += self.w[r] * self.z[r] * self.z[r];
        }
        (sw, swz, swzz)
    }
}

/// Weighted SSE around the weighted mean: sum w z^2 - (sum w z)^2 / sum w.
fn sse(sw: f64, swz: f64, swzz: f64) -> f64 {
    if sw <= 0.0 {
        return 0.0;
    }
    (swzz - swz * swz / sw).max(0.0)
}

impl SplitCriterion for VarianceCriterion<'_> {
    fn leaf_value(&self, rows: &[usize]) -> f64 {
        let (sw, swz, _) = self.sums(rows);
        if sw > 0.0 {
            swz / sw
        } else {
            0.0
        }
    }

    fn is_pure(&self, rows: &[usize]) -> bool {
        let (sw, swz, swzz) = self.sums(rows);
        sse(sw, swz, swzz) <= GAIN_EPS
    }

    fn best_for_feature(
        &self,
        feature: usize,
        sorted_rows: &[usize],
        min_leaf: usize,
    ) -> Option<BestSplit> {
        let (tw, twz, twzz) = self.sums(sorted_rows);
        let parent = sse(tw, twz, twzz);
        let mut lw = 0.0;
        let mut lwz = 0.0;
        let mut lwzz = 0.0;
        let mut best: Option<BestSplit> = None;
        for i in 0..sorted_rows.len() - 1 {
            let r = sorted_rows[i];
            lw += self.w[r];
            lwz += self.w[r] * self.z[r];
            lwzz += self.w[r] * self.z[r] * self.z[r];
            let a = self.x[r][feature];
            let b = self.x[sorted_rows[i + 1]][feature];
            if a == b {
                continue;
            }
            let n_left = i + 1;
            let n_right = sorted_rows.len() - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let threshold = (a + b) / 2.0;
            if !(threshold > a && threshold <= b) {
                continue;
            }
            let gain = parent - sse(lw, lwz, lwzz) - sse(tw - lw, twz - lwz, twzz - lwzz);
            if gain > GAIN_EPS && best.as_ref().map_or(true, |b| gain > b.gain + GAIN_EPS) {
                best = Some(BestSplit { feature, threshold, gain });
            }
        }
        best
    }
}

/// Fit a weighted least-squares regression tree to real targets `z`.
pub fn fit_regression(
    x: &[Vec<f64>],
    z: &[f64],
    weights: &[f64],
    opts: TreeOptions,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let n_features = x.first().map(|r| r.len()).unwrap_or(0);
    let mut builder = Builder {
        x,
        criterion: VarianceCriterion { x, z, w: weights },
        opts,
        n_features,
        nodes: Vec::new(),
    };
    builder.build((0..x.len()).collect(), 0, rng);
    Tree { nodes: builder.nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn uniform_weights(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn perfect_split_on_feature_three() {
        // Feature 3 separates the classes at 0.5; everything else is noise.
        let x: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let label = i % 2;
                vec![0.3, (i as f64) * 0.01, 0.9, if label == 0 { 0.1 } else { 0.9 }]
            })
            .collect();
        let y: Vec<i8> = (0..10).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
        let tree = fit_classification(
            &x,
            &y,
            &uniform_weights(10),
            TreeOptions { max_depth: Some(4), ..Default::default() },
            &mut seed::rng(0),
        );
        assert_eq!(tree.root_split(), Some((3, 0.5)));
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(tree.eval(xi).signum() as i8, *yi);
        }
    }

    #[test]
    fn pure_node_becomes_leaf_immediately() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]];
        let y = vec![1, 1, 1];
        let tree =
            fit_classification(&x, &y, &uniform_weights(3), TreeOptions::default(), &mut seed::rng(0));
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.eval(&[9.0, 9.0]), 1.0);
    }

    /// Exhaustive (feature, threshold) enumeration of weighted Gini gain,
    /// with the documented tie rule.
    fn oracle_root_split(x: &[Vec<f64>], y: &[i8]) -> Option<(usize, f64)> {
        let n = x.len();
        let d = x[0].len();
        let gini = |neg: f64, pos: f64| -> f64 {
            let t = neg + pos;
            if t == 0.0 {
                0.0
            } else {
                t - (neg * neg + pos * pos) / t
            }
        };
        let (mut tot_neg, mut tot_pos) = (0.0, 0.0);
        for &yi in y {
            if yi > 0 {
                tot_pos += 1.0;
            } else {
                tot_neg += 1.0;
            }
        }
        let parent = gini(tot_neg, tot_pos);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..d {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for pair in vals.windows(2) {
                let t = (pair[0] + pair[1]) / 2.0;
                let (mut ln, mut lp) = (0.0, 0.0);
                for i in 0..n {
                    if x[i][f] < t {
                        if y[i] > 0 {
                            lp += 1.0;
                        } else {
                            ln += 1.0;
                        }
                    }
                }
                let gain = parent - gini(ln, lp) - gini(tot_neg - ln, tot_pos - lp);
                if gain > 1e-12 {
                    let better = match &best {
                        None => true,
                        Some((bg, bf, bt)) => {
                            gain > bg + 1e-12
                                || ((gain - bg).abs() <= 1e-12 && (f < *bf || (f == *bf && t < *bt)))
                        }
                    };
                    if better {
                        best = Some((gain, f, t));
                    }
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    #[test]
    fn root_split_matches_exhaustive_oracle() {
        for trial in 0..20 {
            let mut rng = seed::rng(trial);
            use rand::Rng;
            let x: Vec<Vec<f64>> =
                (0..8).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let y: Vec<i8> = (0..8).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            if y.iter().all(|&v| v == y[0]) {
                continue;
            }
            let tree = fit_classification(
                &x,
                &y,
                &uniform_weights(8),
                TreeOptions { max_depth: Some(1), ..Default::default() },
                &mut seed::rng(0),
            );
            assert_eq!(tree.root_split(), oracle_root_split(&x, &y), "trial {trial}");
        }
    }

    #[test]
    fn min_leaf_is_respected() {
        let x: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let y: Vec<i8> = vec![-1, -1, -1, -1, -1, -1, -1, -1, 1];
        let tree = fit_classification(
            &x,
            &y,
            &uniform_weights(9),
            TreeOptions { min_leaf: 3, ..Default::default() },
            &mut seed::rng(0),
        );
        // No split can put fewer than 3 samples on a side, so the lone
        // positive cannot be isolated.
        fn check(nodes: &[Node], idx: usize, rows: Vec<usize>, x: &[Vec<f64>]) {
            match &nodes[idx] {
                Node::Leaf { .. } => assert!(rows.len() >= 3, "leaf with {} rows", rows.len()),
                Node::Split { feature, threshold, left, right, .. } => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| x[i][*feature] < *threshold);
                    check(nodes, *left, l, x);
                    check(nodes, *right, r, x);
                }
            }
        }
        check(&tree.nodes, 0, (0..9).collect(), &x);
    }

    #[test]
    fn regression_tree_fits_step_function() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let z: Vec<f64> = (0..12).map(|i| if i < 6 { -2.0 } else { 5.0 }).collect();
        let tree = fit_regression(
            &x,
            &z,
            &uniform_weights(12),
            TreeOptions { max_depth: Some(1), ..Default::default() },
            &mut seed::rng(0),
        );
        assert_eq!(tree.root_split(), Some((0, 5.5)));
        assert_eq!(tree.eval(&[0.0]), -2.0);
        assert_eq!(tree.eval(&[11.0]), 5.0);
    }

    #[test]
    fn all_split_gains_are_positive() {
        let mut rng = seed::rng(99);
        use rand::Rng;
        let x: Vec<Vec<f64>> =
            (0..40).map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<i8> = (0..40).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let tree =
            fit_classification(&x, &y, &uniform_weights(40), TreeOptions::default(), &mut seed::rng(1));
        for node in &tree.nodes {
            if let Node::Split { gain, .. } = node {
                assert!(*gain > 0.0);
            }
        }
        // Training data is memorized when growth is unbounded with min_leaf 1
        // and no duplicate feature rows.
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(tree.eval(xi).signum() as i8, *yi);
        }
    }
}
