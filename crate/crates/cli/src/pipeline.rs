//! Shared pipeline plumbing: experiment ids, learner construction from
//! config, cache layout, and feature extraction over cached images.

use crate::config::Config;
use periocular::dataset::{load_manifest, SampleRecord, SplitPlan};
use periocular::error::{Error, Result};
use periocular::features::{self, FeatureVector};
use periocular::image::{decode_pgm, GrayImage};
use periocular::learn::{
    EnsembleParams, GbtParams, LabeledSet, LearnerConfig, TreeParams,
};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    NonOccluded,
    Occluded,
}

impl Condition {
    pub fn parse(token: &str) -> Result<Condition> {
        match token {
            "non_occluded" => Ok(Condition::NonOccluded),
            "occluded" => Ok(Condition::Occluded),
            other => Err(Error::Usage(format!(
                "condition must be non_occluded or occluded, got {other:?}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Condition::NonOccluded => "non_occluded",
            Condition::Occluded => "occluded",
        }
    }
}

/// The paper's five experiment families: raw pixels, single-radius ULBP,
/// the 472-value ULBP concatenation, HOG at one grid, and the histogram
/// fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Raw,
    Ulbp(u32),
    UlbpConcat,
    Hog(usize),
    Fusion,
}

impl ExperimentId {
    pub fn parse(token: &str) -> Result<ExperimentId> {
        match token {
            "raw" => Ok(ExperimentId::Raw),
            "ulbp_concat" => Ok(ExperimentId::UlbpConcat),
            "fusion" => Ok(ExperimentId::Fusion),
            _ => {
                if let Some(radius) = token.strip_prefix("ulbp") {
                    let radius: u32 = radius.parse().map_err(|_| {
                        Error::Usage(format!("bad experiment id {token:?}"))
                    })?;
                    return Ok(ExperimentId::Ulbp(radius));
                }
                if let Some(grid) = token.strip_prefix("hog") {
                    let grid: usize = grid
                        .parse()
                        .map_err(|_| Error::Usage(format!("bad experiment id {token:?}")))?;
                    return Ok(ExperimentId::Hog(grid));
                }
                Err(Error::Usage(format!(
                    "unknown experiment {token:?}; expected raw, ulbp1..ulbp8, ulbp_concat, hog3, hog5, hog10, or fusion"
                )))
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            ExperimentId::Raw => "raw".into(),
            ExperimentId::Ulbp(r) => format!("ulbp{r}"),
            ExperimentId::UlbpConcat => "ulbp_concat".into(),
            ExperimentId::Hog(b) => format!("hog{b}"),
            ExperimentId::Fusion => "fusion".into(),
        }
    }

    pub fn extract(self, img: &GrayImage) -> Result<FeatureVector> {
        match self {
            ExperimentId::Raw => features::raw_features(img),
            ExperimentId::Ulbp(r) => features::ulbp_histogram(img, r),
            ExperimentId::UlbpConcat => features::ulbp_concat(img),
            ExperimentId::Hog(b) => features::hog_features(img, b),
            ExperimentId::Fusion => features::canonical_fusion(img),
        }
    }
}

/// Build the learner from flat config keys; SVM hyperparameters stay unset
/// unless `svm_c`/`svm_gamma` are given (grid search fills them later).
pub fn learner_from_config(cfg: &Config) -> Result<LearnerConfig> {
    let kind = cfg.get("learner").unwrap_or("svm");
    let ensemble_params = |defaults: EnsembleParams| -> Result<EnsembleParams> {
        Ok(EnsembleParams {
            n_learners: cfg.get_or("n_learners", defaults.n_learners)?,
            learning_rate: cfg.get_or("learning_rate", defaults.learning_rate)?,
            max_depth: match cfg.get_parsed::<usize>("max_depth")? {
                Some(d) => Some(d),
                None => defaults.max_depth,
            },
            min_leaf: cfg.get_or("min_leaf", defaults.min_leaf)?,
        })
    };
    use periocular::learn::EnsembleKind as K;
    match kind {
        "svm" => Ok(LearnerConfig::Svm {
            c: cfg.get_parsed("svm_c")?,
            gamma: cfg.get_parsed("svm_gamma")?,
            tol: cfg.get_or("svm_tol", 1e-3)?,
        }),
        "tree" => Ok(LearnerConfig::Tree {
            params: TreeParams {
                max_depth: cfg.get_parsed("max_depth")?,
                min_leaf: cfg.get_or("min_leaf", 1)?,
            },
        }),
        "bagging" => Ok(LearnerConfig::Bagging {
            params: ensemble_params(EnsembleParams::default_for(K::Bagging))?,
        }),
        "random_forest" => Ok(LearnerConfig::RandomForest {
            params: ensemble_params(EnsembleParams::default_for(K::RandomForest))?,
        }),
        "adaboost_m1" => Ok(LearnerConfig::AdaboostM1 {
            params: ensemble_params(EnsembleParams::default_for(K::AdaboostM1))?,
        }),
        "logitboost" => Ok(LearnerConfig::Logitboost {
            params: ensemble_params(EnsembleParams::default_for(K::Logitboost))?,
        }),
        "gentleboost" => Ok(LearnerConfig::Gentleboost {
            params: ensemble_params(EnsembleParams::default_for(K::Gentleboost))?,
        }),
        "rusboost" => Ok(LearnerConfig::Rusboost {
            params: ensemble_params(EnsembleParams::default_for(K::Rusboost))?,
        }),
        "gbt" => Ok(LearnerConfig::Gbt { params: gbt_params_from_config(cfg)? }),
        other => Err(Error::Usage(format!("unknown learner {other:?}"))),
    }
}

pub fn gbt_params_from_config(cfg: &Config) -> Result<GbtParams> {
    let d = GbtParams::default();
    Ok(GbtParams {
        n_rounds: cfg.get_or("gbt_rounds", d.n_rounds)?,
        learning_rate: cfg.get_or("learning_rate", d.learning_rate)?,
        max_depth: cfg.get_or("max_depth", d.max_depth)?,
        lambda: cfg.get_or("gbt_lambda", d.lambda)?,
        min_leaf: cfg.get_or("min_leaf", d.min_leaf)?,
    })
}

pub fn cache_dir(out: &Path) -> PathBuf {
    out.join("cache")
}

pub fn cache_image_path(out: &Path, row: usize) -> PathBuf {
    cache_dir(out).join(format!("img_{row:05}.pgm"))
}

pub fn split_path(out: &Path) -> PathBuf {
    out.join("split.json")
}

pub fn load_records(cfg: &Config) -> Result<(Vec<SampleRecord>, PathBuf)> {
    let manifest_path = cfg.resolve_path(cfg.require("manifest")?);
    let file = std::fs::File::open(&manifest_path).map_err(|e| {
        Error::Manifest { row: 0, msg: format!("cannot open {}: {e}", manifest_path.display()) }
    })?;
    let records = load_manifest(file)?;
    Ok((records, manifest_path))
}

pub fn load_plan(out: &Path) -> Result<SplitPlan> {
    let path = split_path(out);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        Error::Manifest {
            row: 0,
            msg: format!("missing split plan {} (run prepare first): {e}", path.display()),
        }
    })?;
    SplitPlan::from_json(&text)
}

/// Load every cached image in manifest row order.
pub fn load_cached_images(out: &Path, n_rows: usize) -> Result<Vec<GrayImage>> {
    (0..n_rows)
        .map(|row| {
            let path = cache_image_path(out, row);
            let bytes = std::fs::read(&path).map_err(|e| {
                Error::Manifest {
                    row,
                    msg: format!("missing cached image {} (run prepare first): {e}", path.display()),
                }
            })?;
            decode_pgm(&bytes)
        })
        .collect()
}

/// Extract features for every record (in parallel) and assemble the labeled
/// set, labels from the manifest gender, subjects preserved.
pub fn extract_dataset(
    records: &[SampleRecord],
    images: &[GrayImage],
    experiment: ExperimentId,
) -> Result<LabeledSet> {
    let vectors: Vec<FeatureVector> = images
        .par_iter()
        .map(|img| experiment.extract(img))
        .collect::<Result<Vec<_>>>()?;
    let labels = records.iter().map(|r| r.gender.label()).collect();
    let subjects = records.iter().map(|r| r.subject_id.clone()).collect();
    LabeledSet::from_vectors(&vectors, labels, subjects)
}

/// Fold row indices (train rows, validation rows) for grid search.
pub fn fold_rows(data: &LabeledSet, plan: &SplitPlan) -> Vec<(Vec<usize>, Vec<usize>)> {
    plan.folds
        .iter()
        .map(|fold| {
            let train = (0..data.len())
                .filter(|&i| fold.train.contains(&data.subject_ids[i]))
                .collect();
            let val = (0..data.len())
                .filter(|&i| fold.validation.contains(&data.subject_ids[i]))
                .collect();
            (train, val)
        })
        .collect()
}

/// Rows whose subject is in the given set.
pub fn rows_in<'a>(
    data: &LabeledSet,
    subjects: &std::collections::BTreeSet<String>,
) -> Vec<usize> {
    (0..data.len()).filter(|&i| subjects.contains(&data.subject_ids[i])).collect()
}

pub fn subset_rows(data: &LabeledSet, rows: &[usize]) -> Result<LabeledSet> {
    LabeledSet::new(
        rows.iter().map(|&i| data.features[i].clone()).collect(),
        rows.iter().map(|&i| data.labels[i]).collect(),
        rows.iter().map(|&i| data.subject_ids[i].clone()).collect(),
        data.spec.clone(),
    )
}
