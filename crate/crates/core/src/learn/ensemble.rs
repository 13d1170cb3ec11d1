//! Tree ensembles: bootstrap bagging, random forests, and the boosting
//! family (AdaBoost.M1, LogitBoost, GentleBoost, RUSBoost).
//!
//! Bagging and forests vote; boosting sums coefficient-weighted learner
//! outputs. All trainers are deterministic given (data order, config, seed):
//! per-learner randomness comes from seeds derived by learner index, so
//! parallel training cannot change results.

use super::tree::{self, Tree, TreeOptions};
use crate::error::{Error, Result};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Bagging,
    RandomForest,
    AdaboostM1,
    Logitboost,
    Gentleboost,
    Rusboost,
}

impl EnsembleKind {
    pub fn is_boosting(self) -> bool {
        !matches!(self, EnsembleKind::Bagging | EnsembleKind::RandomForest)
    }

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Bagging => "bagging",
            EnsembleKind::RandomForest => "random_forest",
            EnsembleKind::AdaboostM1 => "adaboost_m1",
            EnsembleKind::Logitboost => "logitboost",
            EnsembleKind::Gentleboost => "gentleboost",
            EnsembleKind::Rusboost => "rusboost",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n_learners: usize,
    pub learning_rate: f64,
    /// Weak-learner depth; `None` grows to purity (bagging/forest default).
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl EnsembleParams {
    /// Paper-aligned defaults: 100 learners at rate 0.1 on depth-3 trees for
    /// boosting, 900 fully grown trees for the random forest.
    pub fn default_for(kind: EnsembleKind) -> Self {
        match kind {
            EnsembleKind::Bagging => {
                Self { n_learners: 100, learning_rate: 1.0, max_depth: None, min_leaf: 1 }
            }
            EnsembleKind::RandomForest => {
                Self { n_learners: 900, learning_rate: 1.0, max_depth: None, min_leaf: 1 }
            }
            _ => Self { n_learners: 100, learning_rate: 0.1, max_depth: Some(3), min_leaf: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub coefficient: f64,
    pub tree: Tree,
}

/// Per-round training evidence kept alongside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EnsembleDiagnostics {
    /// Sum of the (normalized) sample-weight distribution after each round,
    /// for the boosters that maintain one.
    pub round_weight_sums: Vec<f64>,
    /// (negative, positive) sample counts of each round's effective training
    /// set; RUSBoost records its undersampled sets here.
    pub round_class_counts: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    pub members: Vec<EnsembleMember>,
    pub diagnostics: EnsembleDiagnostics,
}

impl EnsembleModel {
    /// Mean vote in [-1,1] for bagging/forest, coefficient-weighted learner
    /// sum for boosting.
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.members.is_empty() {
            return 0.0;
        }
        match self.kind {
            EnsembleKind::Bagging | EnsembleKind::RandomForest => {
                let votes: f64 = self.members.iter().map(|m| m.tree.eval(x)).sum();
                votes / self.members.len() as f64
            }
            _ => self.members.iter().map(|m| m.coefficient * m.tree.eval(x)).sum(),
        }
    }

    pub fn label(&self, x: &[f64]) -> i8 {
        if self.score(x) > 0.0 {
            1
        } else {
            -1
        }
    }
}

fn validate(x: &[Vec<f64>], y: &[i8], params: &EnsembleParams) -> Result<()> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Training(format!("need >= 2 labeled samples, got {}", x.len())));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    if params.n_learners == 0 {
        return Err(Error::Argument("n_learners must be >= 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::Argument(format!(
            "learning_rate must be in (0,1], got {}",
            params.learning_rate
        )));
    }
    Ok(())
}

pub fn train(
    kind: EnsembleKind,
    x: &[Vec<f64>],
    y: &[i8],
    params: EnsembleParams,
    seed_value: u64,
) -> Result<EnsembleModel> {
    validate(x, y, &params)?;
    match kind {
        EnsembleKind::Bagging => Ok(train_resampled(x, y, params, seed_value, None)),
        EnsembleKind::RandomForest => {
            let d = x[0].len();
            let k = (d as f64).sqrt().ceil() as usize;
            Ok(train_resampled(x, y, params, seed_value, Some(k.max(1))))
        }
        EnsembleKind::AdaboostM1 => Ok(train_adaboost(x, y, params, seed_value)),
        EnsembleKind::Rusboost => Ok(train_rusboost(x, y, params, seed_value)),
        EnsembleKind::Logitboost => Ok(train_logitboost(x, y, params, seed_value)),
        EnsembleKind::Gentleboost => Ok(train_gentleboost(x, y, params, seed_value)),
    }
}

fn tree_opts(params: &EnsembleParams, features_per_split: Option<usize>) -> TreeOptions {
    TreeOptions { max_depth: params.max_depth, min_leaf: params.min_leaf, features_per_split }
}

fn train_resampled(
    x: &[Vec<f64>],
    y: &[i8],
    params: EnsembleParams,
    seed_value: u64,
    features_per_split: Option<usize>,
) -> EnsembleModel {
    let n = x.len();
    let weights = vec![1.0; n];
    let opts = tree_opts(&params, features_per_split);
    let members: Vec<EnsembleMember> = (0..params.n_learners)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng_for(seed_value, t as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let tree = tree::fit_classification_on(x, y, &weights, rows, opts, &mut rng);
            EnsembleMember { coefficient: 1.0, tree }
        })
        .collect();
    let kind =
        if features_per_split.is_some() { EnsembleKind::RandomForest } else { EnsembleKind::Bagging };
    EnsembleModel { kind, members, diagnostics: EnsembleDiagnostics::default() }
}

/// Error floor so a perfect round still produces a finite coefficient.
const ERR_FLOOR: f64 = 1e-10;

fn boost_coefficient(err: f64, learning_rate: f64) -> f64 {
    let e = err.clamp(ERR_FLOOR, 1.0 - ERR_FLOOR);
    learning_rate * 0.5 * ((1.0 - e) / e).ln()
}

fn normalize(w: &mut [f64]) -> f64 {
    let sum: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= sum;
    }
    w.iter().sum()
}

fn train_adaboost(x: &[Vec<f64>], y: &[i8], params: EnsembleParams, seed_value: u64) -> EnsembleModel {
    let n = x.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut diagnostics = EnsembleDiagnostics::default();
    let opts = tree_opts(&params, None);
    for t in 0..params.n_learners {
        let mut rng = seed::rng_for(seed_value, t as u64);
        let tree = tree::fit_classification(x, y, &w, opts, &mut rng);
        let preds: Vec<f64> = x.iter().map(|xi| tree.eval(xi)).collect();
        let err: f64 = preds
            .iter()
            .zip(y)
            .zip(&w)
            .filter(|((p, yi), _)| p.signum() as i8 != **yi)
            .map(|(_, wi)| *wi)
            .sum();
        if err >= 0.5 {
            break; // no weak learner left worth adding
        }
        let coef = boost_coefficient(err, params.learning_rate);
        members.push(EnsembleMember { coefficient: coef, tree });
        let n_pos = y.iter().filter(|&&v| v > 0).count();
        diagnostics.round_class_counts.push((n - n_pos, n_pos));
        if err <= 0.0 {
            diagnostics.round_weight_sums.push(w.iter().sum());
            break; // perfect learner; later rounds would see degenerate weights
        }
        for i in 0..n {
            w[i] *= (-coef * f64::from(y[i]) * preds[i]).exp();
        }
        diagnostics.round_weight_sums.push(normalize(&mut w));
    }
    EnsembleModel { kind: EnsembleKind::AdaboostM1, members, diagnostics }
}

fn train_rusboost(x: &[Vec<f64>], y: &[i8], params: EnsembleParams, seed_value: u64) -> EnsembleModel {
    let n = x.len();
    let pos: Vec<usize> = (0..n).filter(|&i| y[i] > 0).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| y[i] <= 0).collect();
    // Ties treat the positive class as the minority.
    let (minority, majority) = if pos.len() <= neg.len() { (&pos, &neg) } else { (&neg, &pos) };

    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut diagnostics = EnsembleDiagnostics::default();
    let opts = tree_opts(&params, None);
    for t in 0..params.n_learners {
        let mut rng = seed::rng_for(seed_value, t as u64);
        // Random undersample of the majority down to the minority count.
        let mut maj = majority.clone();
        maj.shuffle(&mut rng);
        maj.truncate(minority.len());
        let mut rows: Vec<usize> = minority.iter().copied().chain(maj).collect();
        rows.sort_unstable();
        let n_pos = rows.iter().filter(|&&i| y[i] > 0).count();
        diagnostics.round_class_counts.push((rows.len() - n_pos, n_pos));

        let tree = tree::fit_classification_on(x, y, &w, rows, opts, &mut rng);
        // Pseudo-loss and reweighting happen on the full set.
        let preds: Vec<f64> = x.iter().map(|xi| tree.eval(xi)).collect();
        let err: f64 = preds
            .iter()
            .zip(y)
            .zip(&w)
            .filter(|((p, yi), _)| p.signum() as i8 != **yi)
            .map(|(_, wi)| *wi)
            .sum();
        if err >= 0.5 {
            break;
        }
        let coef = boost_coefficient(err, params.learning_rate);
        members.push(EnsembleMember { coefficient: coef, tree });
        if err <= 0.0 {
            diagnostics.round_weight_sums.push(w.iter().sum());
            break;
        }
        for i in 0..n {
            w[i] *= (-coef * f64::from(y[i]) * preds[i]).exp();
        }
        diagnostics.round_weight_sums.push(normalize(&mut w));
    }
    EnsembleModel { kind: EnsembleKind::Rusboost, members, diagnostics }
}

/// Residual clip for LogitBoost's Newton targets.
const Z_MAX: f64 = 4.0;

fn train_logitboost(
    x: &[Vec<f64>],
    y: &[i8],
    params: EnsembleParams,
    seed_value: u64,
) -> EnsembleModel {
    let n = x.len();
    let y01: Vec<f64> = y.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
    let mut f: Vec<f64> = vec![0.0; n];
    let mut members = Vec::new();
    let opts = tree_opts(&params, None);
    for t in 0..params.n_learners {
        let mut rng = seed::rng_for(seed_value, t as u64);
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        for i in 0..n {
            let p = 1.0 / (1.0 + (-2.0 * f[i]).exp());
            let wi = (p * (1.0 - p)).max(1e-12);
            w[i] = wi;
            z[i] = ((y01[i] - p) / wi).clamp(-Z_MAX, Z_MAX);
        }
        let tree = tree::fit_regression(x, &z, &w, opts, &mut rng);
        let coef = params.learning_rate * 0.5;
        for i in 0..n {
            f[i] += coef * tree.eval(&x[i]);
        }
        members.push(EnsembleMember { coefficient: coef, tree });
    }
    EnsembleModel {
        kind: EnsembleKind::Logitboost,
        members,
        diagnostics: EnsembleDiagnostics::default(),
    }
}

fn train_gentleboost(
    x: &[Vec<f64>],
    y: &[i8],
    params: EnsembleParams,
    seed_value: u64,
) -> EnsembleModel {
    let n = x.len();
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut members = Vec::new();
    let mut diagnostics = EnsembleDiagnostics::default();
    let opts = tree_opts(&params, None);
    for t in 0..params.n_learners {
        let mut rng = seed::rng_for(seed_value, t as u64);
        let tree = tree::fit_regression(x, &yf, &w, opts, &mut rng);
        let coef = params.learning_rate;
        for i in 0..n {
            w[i] *= (-yf[i] * coef * tree.eval(&x[i])).exp();
        }
        diagnostics.round_weight_sums.push(normalize(&mut w));
        members.push(EnsembleMember { coefficient: coef, tree });
    }
    EnsembleModel { kind: EnsembleKind::Gentleboost, members, diagnostics }
}
