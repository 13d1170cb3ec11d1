//! Feature relevance from gradient-boosted trees: per-feature split-gain
//! shares, threshold selection sweeps with retraining, and blue-tint pixel
//! overlays for raw-pixel specs.

use crate::error::{Error, Result};
use crate::features::FeatureSpec;
use crate::image::{GrayImage, RgbImage};
use crate::learn::{GbtParams, LabeledSet, LearnerConfig, TrainedModel};
use crate::seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    RawGain,
    UnitSum,
}

/// Per-feature relevance scores aligned to a feature spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMap {
    pub scores: Vec<f64>,
    pub normalization: Normalization,
}

impl ImportanceMap {
    pub fn from_raw_gains(gains: Vec<f64>) -> Self {
        Self { scores: gains, normalization: Normalization::RawGain }
    }

    /// Scale scores to unit sum; an all-zero map stays all-zero.
    pub fn into_unit_sum(mut self) -> Self {
        let total: f64 = self.scores.iter().sum();
        if total > 0.0 {
            for s in &mut self.scores {
                *s /= total;
            }
        }
        self.normalization = Normalization::UnitSum;
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Count of features with nonzero relevance (features the model ever
    /// split on).
    pub fn n_nonzero(&self) -> usize {
        self.scores.iter().filter(|&&s| s > 0.0).count()
    }

    /// Total order used by every selection: descending score, ties by
    /// ascending index.
    fn ranked_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.scores[b].partial_cmp(&self.scores[a]).unwrap().then(a.cmp(&b))
        });
        idx
    }
}

/// Unit-sum share of split gain per feature, across all of the model's
/// trees. Features never split score exactly 0.
pub fn importance_from_gbt(model: &TrainedModel) -> Result<ImportanceMap> {
    let gbt = model
        .gbt()
        .ok_or_else(|| Error::Usage(format!("importance needs a gbt model, got {}", model.kind_name())))?;
    Ok(ImportanceMap::from_raw_gains(gbt.feature_gains()).into_unit_sum())
}

/// All indices with score >= threshold, best first.
pub fn select_by_threshold(imp: &ImportanceMap, threshold: f64) -> Vec<usize> {
    imp.ranked_indices().into_iter().filter(|&i| imp.scores[i] >= threshold).collect()
}

/// The first `n` indices of the ranking (so zero-score features may appear
/// once the positive ones run out).
pub fn select_top_n(imp: &ImportanceMap, n: usize) -> Vec<usize> {
    let mut idx = imp.ranked_indices();
    idx.truncate(n);
    idx
}

/// One sweep entry, mirroring the report columns threshold/N/CCR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub threshold: f64,
    pub selected: Vec<usize>,
    pub n_selected: usize,
    pub ccr_after_retrain: f64,
    /// Set when the selection was empty and the CCR is the majority-class
    /// rate instead of a retrained model's.
    pub degenerate: bool,
}

/// For each threshold: fit a GBT on `train`, select features scoring at or
/// above the threshold, retrain `retrain` on the reduced representation, and
/// score CCR on `test`. Entries are independent and run in parallel, each on
/// a seed derived from (seed, entry index).
pub fn threshold_sweep(
    train: &LabeledSet,
    test: &LabeledSet,
    thresholds: &[f64],
    gbt_params: GbtParams,
    retrain: &LearnerConfig,
    seed_value: u64,
) -> Result<Vec<SelectionResult>> {
    if train.spec != test.spec {
        return Err(Error::Usage("train and test sets come from different specs".into()));
    }
    thresholds
        .par_iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let entry_seed = seed::derive(seed_value, i as u64);
            let gbt = crate::learn::train_gbt(train, gbt_params, entry_seed)?;
            let imp = importance_from_gbt(&gbt)?;
            let selected = select_by_threshold(&imp, threshold);
            if selected.is_empty() {
                // Majority vote of the training labels, scored on test.
                let pos = train.labels.iter().filter(|&&l| l > 0).count();
                let majority: i8 = if pos * 2 > train.len() { 1 } else { -1 };
                let hits = test.labels.iter().filter(|&&l| l == majority).count();
                return Ok(SelectionResult {
                    threshold,
                    selected,
                    n_selected: 0,
                    ccr_after_retrain: hits as f64 / test.len() as f64,
                    degenerate: true,
                });
            }
            let reduced_train = train.project(&selected)?;
            let reduced_test = test.project(&selected)?;
            let model = retrain.train(&reduced_train, entry_seed)?;
            let hits = reduced_test
                .features
                .iter()
                .zip(&reduced_test.labels)
                .filter(|(x, y)| model.label_row(x) == **y)
                .count();
            Ok(SelectionResult {
                threshold,
                n_selected: selected.len(),
                selected,
                ccr_after_retrain: hits as f64 / test.len() as f64,
                degenerate: false,
            })
        })
        .collect()
}

/// Sweep entries as `threshold,n_selected,ccr` CSV; an optional `#` comment
/// line carries run provenance.
pub fn sweep_to_csv(results: &[SelectionResult], comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = comment {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str("threshold,n_selected,ccr\n");
    for r in results {
        out.push_str(&format!("{},{},{}\n", r.threshold, r.n_selected, r.ccr_after_retrain));
    }
    out
}

/// Tint the pixel loci of the top `n` features fully blue over the grayscale
/// base. The spec must map indices to pixels (raw extractor).
pub fn render_overlay(
    imp: &ImportanceMap,
    spec: &FeatureSpec,
    top_n: usize,
    base: &GrayImage,
) -> Result<RgbImage> {
    if imp.len() != spec.length() {
        return Err(Error::Usage(format!(
            "importance map has {} scores but spec declares {} features",
            imp.len(),
            spec.length()
        )));
    }
    let mut out = RgbImage::from_gray(base);
    for index in select_top_n(imp, top_n) {
        let (x, y) = spec
            .pixel_locus(index)?
            .ok_or_else(|| Error::Usage("overlay needs a spec with per-pixel loci".into()))?;
        if x >= base.width() || y >= base.height() {
            return Err(Error::Usage(format!(
                "feature locus ({x},{y}) falls outside the {}x{} base image",
                base.width(),
                base.height()
            )));
        }
        out.set(x, y, [0, 0, 255]);
    }
    Ok(out)
}
