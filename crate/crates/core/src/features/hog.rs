//! Histogram-of-oriented-gradients features over a BxB grid of windows.
//!
//! Gradients come from centered differences (masks [-1,0,1] horizontally and
//! vertically): h = I(x+1,y) - I(x-1,y), v = I(x,y+1) - I(x,y-1). Each
//! interior pixel adds its magnitude sqrt(v^2 + h^2) to the 18-degree bin of
//! theta = atan2(v, h) mapped to [0, 360), inside the window containing the
//! pixel. Windows are near-equal rectangles (boundary i at floor(i*dim/B)),
//! and each window's 20-bin histogram is L2-normalized (zero stays zero).

use super::{require_canonical, FeatureSpec, FeatureVector};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use std::sync::Arc;

/// Orientation bins per window: 360 degrees at 18-degree intervals.
pub const HOG_BINS: usize = 20;

const GRIDS: [usize; 3] = [3, 5, 10];

fn window_edges(dim: usize, grid: usize) -> Vec<usize> {
    (0..=grid).map(|i| i * dim / grid).collect()
}

fn window_of(edges: &[usize], coord: usize) -> usize {
    // edges is short (<= 11 entries); linear scan beats bookkeeping.
    edges.iter().rposition(|&e| e <= coord).unwrap().min(edges.len() - 2)
}

/// Raw per-window histograms before normalization: window (row r, col c) is
/// entry r*B + c, and its bin masses sum to the total gradient magnitude of
/// the window's interior pixels.
pub fn hog_window_histograms(img: &GrayImage, grid: usize) -> Result<Vec<[f64; HOG_BINS]>> {
    require_canonical(img)?;
    if !GRIDS.contains(&grid) {
        return Err(Error::Argument(format!("HOG grid must be one of {GRIDS:?}, got {grid}")));
    }
    let x_edges = window_edges(img.width(), grid);
    let y_edges = window_edges(img.height(), grid);
    let mut windows = vec![[0.0f64; HOG_BINS]; grid * grid];
    for y in 1..img.height() - 1 {
        let wy = window_of(&y_edges, y);
        for x in 1..img.width() - 1 {
            let h = img.getf(x + 1, y) - img.getf(x - 1, y);
            let v = img.getf(x, y + 1) - img.getf(x, y - 1);
            if h == 0.0 && v == 0.0 {
                continue;
            }
            let m = (v * v + h * h).sqrt();
            let mut theta = v.atan2(h).to_degrees();
            if theta < 0.0 {
                theta += 360.0;
            }
            let bin = ((theta / 18.0).floor() as usize).min(HOG_BINS - 1);
            let wx = window_of(&x_edges, x);
            windows[wy * grid + wx][bin] += m;
        }
    }
    Ok(windows)
}

/// HOG feature vector: window histograms in row-major window order, each
/// L2-normalized; length 20 * B^2. Requires the canonical 120x160 image.
pub fn hog_features(img: &GrayImage, grid: usize) -> Result<FeatureVector> {
    let windows = hog_window_histograms(img, grid)?;
    let mut values = Vec::with_capacity(HOG_BINS * windows.len());
    for w in &windows {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.extend(w.iter().map(|v| v / norm));
        } else {
            values.extend_from_slice(w);
        }
    }
    let spec = Arc::new(FeatureSpec::Hog { grid, width: img.width(), height: img.height() });
    FeatureVector::new(values, spec)
}
