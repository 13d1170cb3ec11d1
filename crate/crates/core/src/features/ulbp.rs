//! Uniform local binary patterns over a circular 8-sample neighborhood.
//!
//! A pattern is built by comparing eight samples on a radius-R circle against
//! the center pixel: sample k sits at angle 2*pi*k/8 (k=0 rightward, counter
//! clockwise on screen, so sample 2 is straight up), contributes bit k, and a
//! sample >= center yields 1. Non-integer sample positions are bilinearly
//! interpolated; the comparison carries a small tolerance so interpolation
//! round-off cannot flip exact ties.
//!
//! Patterns with at most 2 circular 0/1 transitions are "uniform"; the 58
//! uniform patterns get dedicated histogram bins (ascending pattern order)
//! and everything else shares bin 58, for 59 bins total.

use super::{require_canonical, FeatureSpec, FeatureVector};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use std::sync::{Arc, OnceLock};

/// Histogram bins per radius: 58 uniform patterns + 1 catch-all.
pub const ULBP_BINS: usize = 59;

/// Radii of the multi-scale concatenation, in output order.
pub const ULBP_RADII: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

const SAMPLES: usize = 8;

/// Comparisons absorb bilinear round-off up to this much.
const COMPARE_EPS: f64 = 1e-6;

/// Sample offsets snap to integers within this much (exact axis-aligned
/// samples would otherwise pick up cos/sin round-off).
const SNAP_EPS: f64 = 1e-9;

/// The 256-entry pattern-to-bin mapping.
#[derive(Debug, Clone)]
pub struct UlbpTable {
    bins: [u8; 256],
}

/// Circular 0/1 transition count of an 8-bit pattern.
pub fn transitions(pattern: u8) -> u32 {
    (pattern ^ pattern.rotate_left(1)).count_ones()
}

impl UlbpTable {
    fn build() -> Self {
        let mut bins = [0u8; 256];
        let mut next = 0u8;
        for p in 0..=255u8 {
            if transitions(p) <= 2 {
                bins[p as usize] = next;
                next += 1;
            } else {
                bins[p as usize] = (ULBP_BINS - 1) as u8;
            }
        }
        debug_assert_eq!(next as usize, ULBP_BINS - 1);
        Self { bins }
    }

    /// Shared read-only instance; built once.
    pub fn shared() -> &'static UlbpTable {
        static TABLE: OnceLock<UlbpTable> = OnceLock::new();
        TABLE.get_or_init(UlbpTable::build)
    }

    pub fn bin(&self, pattern: u8) -> usize {
        self.bins[pattern as usize] as usize
    }
}

fn sample_offsets(radius: u32) -> [(f64, f64); SAMPLES] {
    let r = f64::from(radius);
    let mut out = [(0.0, 0.0); SAMPLES];
    for (k, slot) in out.iter_mut().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64;
        let mut dx = r * theta.cos();
        let mut dy = -r * theta.sin();
        if (dx - dx.round()).abs() < SNAP_EPS {
            dx = dx.round();
        }
        if (dy - dy.round()).abs() < SNAP_EPS {
            dy = dy.round();
        }
        *slot = (dx, dy);
    }
    out
}

fn bilinear(img: &GrayImage, xs: f64, ys: f64) -> f64 {
    let x0 = xs.floor() as usize;
    let y0 = ys.floor() as usize;
    let fx = xs - x0 as f64;
    let fy = ys - y0 as f64;
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let top = (1.0 - fx) * img.getf(x0, y0) + fx * img.getf(x1, y0);
    let bot = (1.0 - fx) * img.getf(x0, y1) + fx * img.getf(x1, y1);
    (1.0 - fy) * top + fy * bot
}

/// ULBP(8,R) code of the pixel at (x, y). The full neighborhood must lie
/// inside the image.
fn code_at(img: &GrayImage, x: usize, y: usize, offsets: &[(f64, f64); SAMPLES]) -> u8 {
    let center = img.getf(x, y);
    let mut pattern = 0u8;
    for (k, &(dx, dy)) in offsets.iter().enumerate() {
        let t = bilinear(img, x as f64 + dx, y as f64 + dy);
        if t - center >= -COMPARE_EPS {
            pattern |= 1 << k;
        }
    }
    pattern
}

/// 59-bin ULBP(8,R) histogram, normalized to unit sum, over every pixel
/// whose radius-R neighborhood lies fully inside the image.
pub fn ulbp_histogram(img: &GrayImage, radius: u32) -> Result<FeatureVector> {
    if !(1..=8).contains(&radius) {
        return Err(Error::Argument(format!("ULBP radius must be in 1..=8, got {radius}")));
    }
    let r = radius as usize;
    if img.width() < 2 * r + 1 || img.height() < 2 * r + 1 {
        return Err(Error::Argument(format!(
            "image {}x{} too small for ULBP radius {radius}",
            img.width(),
            img.height()
        )));
    }
    let table = UlbpTable::shared();
    let offsets = sample_offsets(radius);
    let mut counts = [0u64; ULBP_BINS];
    for y in r..img.height() - r {
        for x in r..img.width() - r {
            counts[table.bin(code_at(img, x, y, &offsets))] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let values = counts.iter().map(|&c| c as f64 / total as f64).collect();
    FeatureVector::new(values, Arc::new(FeatureSpec::Ulbp { radius }))
}

/// Concatenated ULBP histograms for radii 1..8, in order; length 472.
/// Requires the canonical 120x160 resolution.
pub fn ulbp_concat(img: &GrayImage) -> Result<FeatureVector> {
    require_canonical(img)?;
    let mut values = Vec::with_capacity(ULBP_BINS * ULBP_RADII.len());
    for radius in ULBP_RADII {
        values.extend_from_slice(&ulbp_histogram(img, radius)?.values);
    }
    FeatureVector::new(values, Arc::new(FeatureSpec::UlbpConcat))
}
