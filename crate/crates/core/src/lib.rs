//! Gender classification from periocular NIR images.
//!
//! The pipeline consumes raw single-channel acquisition images (no iris
//! normalization or encoding) and runs:
//!
//! 1. [`image`] — PGM decode/encode, bilinear resize to the 120x160 working
//!    resolution, and circular iris occlusion masking.
//! 2. [`dataset`] — manifest ingestion and gender-balanced, person-disjoint
//!    train/test splits with k-fold cross-validation plans.
//! 3. [`features`] — intensity histogram, uniform LBP at radii 1..8, multi-grid
//!    HOG, and concatenation fusion, each with per-index provenance.
//! 4. [`learn`] — Gaussian-kernel SVM (SMO), CART trees, bagging, random
//!    forest, boosting variants, and gradient-boosted trees.
//! 5. [`relevance`] — Gini-importance extraction, threshold selection sweeps,
//!    and pixel-overlay rendering.
//! 6. [`eval`] — CCR/TPR/TNR/MCC metrics, cross-validation execution, and
//!    CSV result tables.
//! 7. [`fanova`] — bootstrap functional ANOVA comparing mean CCR curves of
//!    occluded vs non-occluded conditions.
//!
//! Everything is deterministic given explicit seeds; there is no implicit
//! randomness anywhere in the crate.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod fanova;
pub mod features;
pub mod image;
pub mod learn;
pub mod relevance;
pub mod seed;
pub mod synth;

pub use error::{Error, Result};
