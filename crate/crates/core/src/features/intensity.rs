//! Raw-pixel and intensity-histogram features.

use super::{require_canonical, FeatureSpec, FeatureVector};
use crate::error::Result;
use crate::image::GrayImage;
use std::sync::Arc;

/// Row-major pixel intensities scaled to [0,1]. Requires the canonical
/// 120x160 resolution; length 19,200.
pub fn raw_features(img: &GrayImage) -> Result<FeatureVector> {
    require_canonical(img)?;
    let values = img.pixels().iter().map(|&v| f64::from(v) / 255.0).collect();
    let spec = Arc::new(FeatureSpec::Raw { width: img.width(), height: img.height() });
    FeatureVector::new(values, spec)
}

/// 256-bin intensity histogram normalized to unit sum.
pub fn intensity_histogram(img: &GrayImage) -> FeatureVector {
    let mut counts = [0u64; 256];
    for &v in img.pixels() {
        counts[v as usize] += 1;
    }
    let n = img.pixels().len() as f64;
    let values = counts.iter().map(|&c| c as f64 / n).collect();
    FeatureVector::new(values, Arc::new(FeatureSpec::IntensityHist)).expect("256 bins")
}
