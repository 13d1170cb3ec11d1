//! Trainable classifiers behind one model type: Gaussian-kernel SVM (SMO),
//! CART trees, bagging/forest and boosting ensembles, and gradient-boosted
//! trees.
//!
//! Models embed the feature spec they were trained on and refuse to score
//! vectors from any other spec. Serialized models round-trip through JSON
//! with bit-identical predictions.

pub mod ensemble;
pub mod gbt;
pub mod svm;
pub mod tree;

pub use ensemble::{EnsembleKind, EnsembleModel, EnsembleParams};
pub use gbt::{GbtModel, GbtParams};
pub use svm::{SvmModel, SvmParams};
pub use tree::{Tree, TreeOptions};

use crate::error::{Error, Result};
use crate::features::{FeatureSpec, FeatureVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Feature rows with +-1 labels (male = -1, female = +1) and aligned subject
/// ids for person-disjoint bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub subject_ids: Vec<String>,
    pub spec: Arc<FeatureSpec>,
}

impl LabeledSet {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<i8>,
        subject_ids: Vec<String>,
        spec: Arc<FeatureSpec>,
    ) -> Result<Self> {
        if features.len() != labels.len() || features.len() != subject_ids.len() {
            return Err(Error::Argument("features, labels, and subjects must align".into()));
        }
        if features.len() < 2 {
            return Err(Error::Argument("a labeled set needs at least 2 samples".into()));
        }
        if labels.iter().any(|l| *l != 1 && *l != -1) {
            return Err(Error::Argument("labels must be +1 (female) or -1 (male)".into()));
        }
        let expect = spec.length();
        if features.iter().any(|r| r.len() != expect) {
            return Err(Error::Argument(format!("every feature row must have {expect} values")));
        }
        Ok(Self { features, labels, subject_ids, spec })
    }

    pub fn from_vectors(
        vectors: &[FeatureVector],
        labels: Vec<i8>,
        subject_ids: Vec<String>,
    ) -> Result<Self> {
        let spec = vectors
            .first()
            .map(|v| v.spec.clone())
            .ok_or_else(|| Error::Argument("empty vector list".into()))?;
        if vectors.iter().any(|v| v.spec != spec) {
            return Err(Error::Usage("vectors come from different feature specs".into()));
        }
        let features = vectors.iter().map(|v| v.values.clone()).collect();
        Self::new(features, labels, subject_ids, spec)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&1) && self.labels.contains(&-1)
    }

    /// Keep only the given feature columns; the result carries a Subset spec
    /// so provenance and spec checks still work.
    pub fn project(&self, indices: &[usize]) -> Result<LabeledSet> {
        let base_len = self.spec.length();
        if indices.iter().any(|&i| i >= base_len) {
            return Err(Error::Argument("projection index out of range".into()));
        }
        let spec = Arc::new(FeatureSpec::Subset {
            base: Box::new((*self.spec).clone()),
            indices: indices.to_vec(),
        });
        let features = self
            .features
            .iter()
            .map(|row| indices.iter().map(|&i| row[i]).collect())
            .collect();
        Ok(LabeledSet {
            features,
            labels: self.labels.clone(),
            subject_ids: self.subject_ids.clone(),
            spec,
        })
    }
}

fn require_trainable(data: &LabeledSet) -> Result<()> {
    if !data.has_both_classes() {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    Ok(())
}

/// Serializable tree hyperparameters (the spec-facing subset of
/// [`TreeOptions`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_leaf: 1 }
    }
}

/// Learned state plus the hyperparameters that produced it; the serde tag is
/// the model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelPayload {
    Svm { params: SvmParams, model: SvmModel },
    Tree { params: TreeParams, model: Tree },
    Bagging { params: EnsembleParams, model: EnsembleModel },
    RandomForest { params: EnsembleParams, model: EnsembleModel },
    AdaboostM1 { params: EnsembleParams, model: EnsembleModel },
    Logitboost { params: EnsembleParams, model: EnsembleModel },
    Gentleboost { params: EnsembleParams, model: EnsembleModel },
    Rusboost { params: EnsembleParams, model: EnsembleModel },
    Gbt { params: GbtParams, model: GbtModel },
}

impl ModelPayload {
    fn kind_name(&self) -> &'static str {
        match self {
            ModelPayload::Svm { .. } => "svm",
            ModelPayload::Tree { .. } => "tree",
            ModelPayload::Bagging { .. } => "bagging",
            ModelPayload::RandomForest { .. } => "random_forest",
            ModelPayload::AdaboostM1 { .. } => "adaboost_m1",
            ModelPayload::Logitboost { .. } => "logitboost",
            ModelPayload::Gentleboost { .. } => "gentleboost",
            ModelPayload::Rusboost { .. } => "rusboost",
            ModelPayload::Gbt { .. } => "gbt",
        }
    }
}

/// A trained classifier bound to its feature spec, config, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub seed: u64,
    pub spec: FeatureSpec,
    pub payload: ModelPayload,
}

impl TrainedModel {
    pub fn kind_name(&self) -> &'static str {
        self.payload.kind_name()
    }

    pub fn spec_id(&self) -> String {
        self.spec.spec_id()
    }

    /// Real-valued score: SVM margin, tree leaf, mean ensemble vote, or GBT
    /// log-odds. Positive means the female (+1) class for every kind.
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match &self.payload {
            ModelPayload::Svm { model, .. } => model.decision(x),
            ModelPayload::Tree { model, .. } => model.eval(x),
            ModelPayload::Bagging { model, .. }
            | ModelPayload::RandomForest { model, .. }
            | ModelPayload::AdaboostM1 { model, .. }
            | ModelPayload::Logitboost { model, .. }
            | ModelPayload::Gentleboost { model, .. }
            | ModelPayload::Rusboost { model, .. } => model.score(x),
            ModelPayload::Gbt { model, .. } => model.raw_score(x),
        }
    }

    /// Class label; score ties resolve to -1 (male).
    pub fn label_row(&self, x: &[f64]) -> i8 {
        if self.score_row(x) > 0.0 {
            1
        } else {
            -1
        }
    }

    fn check_spec(&self, v: &FeatureVector) -> Result<()> {
        if *v.spec != self.spec {
            return Err(Error::Usage(format!(
                "feature spec mismatch: model was trained on {}, vector is {}",
                self.spec_id(),
                v.spec_id()
            )));
        }
        Ok(())
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<i8> {
        self.check_spec(v)?;
        Ok(self.label_row(&v.values))
    }

    pub fn score(&self, v: &FeatureVector) -> Result<f64> {
        self.check_spec(v)?;
        Ok(self.score_row(&v.values))
    }

    pub fn gbt(&self) -> Option<&GbtModel> {
        match &self.payload {
            ModelPayload::Gbt { model, .. } => Some(model),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.version != 1 {
            return Err(Error::Usage(format!("unsupported model version {}", model.version)));
        }
        Ok(model)
    }
}

fn wrap(data: &LabeledSet, seed: u64, payload: ModelPayload) -> TrainedModel {
    TrainedModel { version: 1, seed, spec: (*data.spec).clone(), payload }
}

pub fn train_svm(data: &LabeledSet, params: SvmParams, seed: u64) -> Result<TrainedModel> {
    require_trainable(data)?;
    let model = svm::train(&data.features, &data.labels, params, seed)?;
    Ok(wrap(data, seed, ModelPayload::Svm { params, model }))
}

pub fn train_tree(data: &LabeledSet, params: TreeParams, seed: u64) -> Result<TrainedModel> {
    require_trainable(data)?;
    let weights = vec![1.0; data.len()];
    let opts = TreeOptions {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf.max(1),
        features_per_split: None,
    };
    let model = tree::fit_classification(
        &data.features,
        &data.labels,
        &weights,
        opts,
        &mut crate::seed::rng(seed),
    );
    Ok(wrap(data, seed, ModelPayload::Tree { params, model }))
}

pub fn train_ensemble(
    kind: EnsembleKind,
    data: &LabeledSet,
    params: EnsembleParams,
    seed: u64,
) -> Result<TrainedModel> {
    require_trainable(data)?;
    let model = ensemble::train(kind, &data.features, &data.labels, params, seed)?;
    let payload = match kind {
        EnsembleKind::Bagging => ModelPayload::Bagging { params, model },
        EnsembleKind::RandomForest => ModelPayload::RandomForest { params, model },
        EnsembleKind::AdaboostM1 => ModelPayload::AdaboostM1 { params, model },
        EnsembleKind::Logitboost => ModelPayload::Logitboost { params, model },
        EnsembleKind::Gentleboost => ModelPayload::Gentleboost { params, model },
        EnsembleKind::Rusboost => ModelPayload::Rusboost { params, model },
    };
    Ok(wrap(data, seed, payload))
}

pub fn train_gbt(data: &LabeledSet, params: GbtParams, seed: u64) -> Result<TrainedModel> {
    require_trainable(data)?;
    let model = gbt::train(&data.features, &data.labels, params, seed)?;
    Ok(wrap(data, seed, ModelPayload::Gbt { params, model }))
}

/// Pluggable classifier surface, so evaluation harnesses can inject test
/// doubles (e.g. leakage canaries) next to real models.
pub trait Classifier: Send + Sync {
    fn score_row(&self, x: &[f64]) -> f64;
    fn label_row(&self, x: &[f64]) -> i8 {
        if self.score_row(x) > 0.0 {
            1
        } else {
            -1
        }
    }
}

impl Classifier for TrainedModel {
    fn score_row(&self, x: &[f64]) -> f64 {
        TrainedModel::score_row(self, x)
    }

    fn label_row(&self, x: &[f64]) -> i8 {
        TrainedModel::label_row(self, x)
    }
}

pub trait Trainer: Sync {
    fn train_set(&self, data: &LabeledSet, seed: u64) -> Result<Box<dyn Classifier>>;
    fn name(&self) -> String;
}

/// Declarative learner choice used by the CLI and evaluation pipelines.
/// SVM entries may leave `c`/`gamma` unset and be resolved by grid search
/// before training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    Svm { c: Option<f64>, gamma: Option<f64>, tol: f64 },
    Tree { params: TreeParams },
    Bagging { params: EnsembleParams },
    RandomForest { params: EnsembleParams },
    AdaboostM1 { params: EnsembleParams },
    Logitboost { params: EnsembleParams },
    Gentleboost { params: EnsembleParams },
    Rusboost { params: EnsembleParams },
    Gbt { params: GbtParams },
}

impl LearnerConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            LearnerConfig::Svm { .. } => "svm",
            LearnerConfig::Tree { .. } => "tree",
            LearnerConfig::Bagging { .. } => "bagging",
            LearnerConfig::RandomForest { .. } => "random_forest",
            LearnerConfig::AdaboostM1 { .. } => "adaboost_m1",
            LearnerConfig::Logitboost { .. } => "logitboost",
            LearnerConfig::Gentleboost { .. } => "gentleboost",
            LearnerConfig::Rusboost { .. } => "rusboost",
            LearnerConfig::Gbt { .. } => "gbt",
        }
    }

    /// Fill unset SVM hyperparameters by fold grid search (C in {1,10,100},
    /// gamma in {1,2,4}/d). Other kinds pass through unchanged.
    pub fn resolve(
        &self,
        data: &LabeledSet,
        folds: &[(Vec<usize>, Vec<usize>)],
        seed: u64,
    ) -> Result<LearnerConfig> {
        match self {
            LearnerConfig::Svm { c, gamma, tol } if c.is_none() || gamma.is_none() => {
                let d = data.spec.length();
                let (c_default, gamma_default) = svm::default_grids(d);
                let c_grid = c.map(|v| vec![v]).unwrap_or(c_default);
                let gamma_grid = gamma.map(|v| vec![v]).unwrap_or(gamma_default);
                let best = svm::grid_search(
                    &data.features,
                    &data.labels,
                    folds,
                    &c_grid,
                    &gamma_grid,
                    *tol,
                    seed,
                )?;
                Ok(LearnerConfig::Svm { c: Some(best.c), gamma: Some(best.gamma), tol: best.tol })
            }
            other => Ok(other.clone()),
        }
    }

    pub fn train(&self, data: &LabeledSet, seed: u64) -> Result<TrainedModel> {
        match self {
            LearnerConfig::Svm { c, gamma, tol } => {
                let (c, gamma) = match (c, gamma) {
                    (Some(c), Some(gamma)) => (*c, *gamma),
                    _ => {
                        return Err(Error::Usage(
                            "SVM hyperparameters unresolved; call resolve() first".into(),
                        ))
                    }
                };
                train_svm(data, SvmParams { c, gamma, tol: *tol }, seed)
            }
            LearnerConfig::Tree { params } => train_tree(data, *params, seed),
            LearnerConfig::Bagging { params } => {
                train_ensemble(EnsembleKind::Bagging, data, *params, seed)
            }
            LearnerConfig::RandomForest { params } => {
                train_ensemble(EnsembleKind::RandomForest, data, *params, seed)
            }
            LearnerConfig::AdaboostM1 { params } => {
                train_ensemble(EnsembleKind::AdaboostM1, data, *params, seed)
            }
            LearnerConfig::Logitboost { params } => {
                train_ensemble(EnsembleKind::Logitboost, data, *params, seed)
            }
            LearnerConfig::Gentleboost { params } => {
                train_ensemble(EnsembleKind::Gentleboost, data, *params, seed)
            }
            LearnerConfig::Rusboost { params } => {
                train_ensemble(EnsembleKind::Rusboost, data, *params, seed)
            }
            LearnerConfig::Gbt { params } => train_gbt(data, *params, seed),
        }
    }
}

impl Trainer for LearnerConfig {
    fn train_set(&self, data: &LabeledSet, seed: u64) -> Result<Box<dyn Classifier>> {
        Ok(Box::new(self.train(data, seed)?))
    }

    fn name(&self) -> String {
        self.kind_name().to_string()
    }
}
