//! Feature extractors: raw intensities, intensity histogram, uniform LBP at
//! radii 1..8, multi-grid HOG, and concatenation fusion.
//!
//! Every extractor is a pure function of the image and its parameters, and
//! every output index can be traced back to an extractor and a locus (pixel,
//! histogram bin, or grid window) through [`FeatureSpec::origin`].

mod hog;
mod intensity;
mod ulbp;

pub use hog::{hog_features, hog_window_histograms, HOG_BINS};
pub use intensity::{intensity_histogram, raw_features};
pub use ulbp::{ulbp_concat, ulbp_histogram, UlbpTable, ULBP_BINS, ULBP_RADII};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

/// Working resolution every fixed-size extractor expects (width x height).
pub const CANONICAL_WIDTH: usize = 120;
pub const CANONICAL_HEIGHT: usize = 160;

/// Which extractor produced a vector, with its parameters. The spec fully
/// determines the vector length and the meaning of every index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "extractor", rename_all = "snake_case")]
pub enum FeatureSpec {
    Raw { width: usize, height: usize },
    IntensityHist,
    Ulbp { radius: u32 },
    UlbpConcat,
    Hog { grid: usize, width: usize, height: usize },
    Fusion { parts: Vec<FeatureSpec> },
    /// A selected subset of a base spec's indices (feature selection);
    /// output index i corresponds to base index `indices[i]`.
    Subset { base: Box<FeatureSpec>, indices: Vec<usize> },
}

/// Provenance of a single output index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrigin {
    Pixel { x: usize, y: usize },
    IntensityBin { value: u8 },
    UlbpBin { radius: u32, bin: usize },
    HogBin { grid: usize, window_row: usize, window_col: usize, bin: usize },
}

impl FeatureSpec {
    pub fn length(&self) -> usize {
        match self {
            FeatureSpec::Raw { width, height } => width * height,
            FeatureSpec::IntensityHist => 256,
            FeatureSpec::Ulbp { .. } => ULBP_BINS,
            FeatureSpec::UlbpConcat => ULBP_BINS * ULBP_RADII.len(),
            FeatureSpec::Hog { grid, .. } => HOG_BINS * grid * grid,
            FeatureSpec::Fusion { parts } => parts.iter().map(|p| p.length()).sum(),
            FeatureSpec::Subset { indices, .. } => indices.len(),
        }
    }

    /// Stable content hash of the spec; two specs compare equal iff their
    /// ids match.
    pub fn spec_id(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<FeatureSpec> {
        Ok(serde_json::from_str(text)?)
    }

    /// Map an output index to its extractor locus. Total over `0..length()`.
    pub fn origin(&self, index: usize) -> Result<IndexOrigin> {
        let len = self.length();
        if index >= len {
            return Err(Error::Argument(format!("feature index {index} out of range 0..{len}")));
        }
        Ok(match self {
            FeatureSpec::Raw { width, .. } => {
                IndexOrigin::Pixel { x: index % width, y: index / width }
            }
            FeatureSpec::IntensityHist => IndexOrigin::IntensityBin { value: index as u8 },
            FeatureSpec::Ulbp { radius } => IndexOrigin::UlbpBin { radius: *radius, bin: index },
            FeatureSpec::UlbpConcat => IndexOrigin::UlbpBin {
                radius: ULBP_RADII[index / ULBP_BINS],
                bin: index % ULBP_BINS,
            },
            FeatureSpec::Hog { grid, .. } => {
                let window = index / HOG_BINS;
                IndexOrigin::HogBin {
                    grid: *grid,
                    window_row: window / grid,
                    window_col: window % grid,
                    bin: index % HOG_BINS,
                }
            }
            FeatureSpec::Fusion { parts } => {
                let mut offset = index;
                for part in parts {
                    if offset < part.length() {
                        return part.origin(offset);
                    }
                    offset -= part.length();
                }
                unreachable!("index checked against total length");
            }
            FeatureSpec::Subset { base, indices } => return base.origin(indices[index]),
        })
    }

    /// Pixel coordinates for a raw-pixel index; `None` when the spec has no
    /// per-pixel loci (histogram and window extractors).
    pub fn pixel_locus(&self, index: usize) -> Result<Option<(usize, usize)>> {
        Ok(match self.origin(index)? {
            IndexOrigin::Pixel { x, y } => Some((x, y)),
            _ => None,
        })
    }

    /// Fusion segment boundaries as (start, end, part) triples.
    pub fn segments(&self) -> Vec<(usize, usize, &FeatureSpec)> {
        match self {
            FeatureSpec::Fusion { parts } => {
                let mut out = Vec::with_capacity(parts.len());
                let mut start = 0;
                for part in parts {
                    let end = start + part.length();
                    out.push((start, end, part));
                    start = end;
                }
                out
            }
            other => vec![(0, other.length(), other)],
        }
    }
}

/// A flat real-valued feature vector tied to the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub spec: Arc<FeatureSpec>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, spec: Arc<FeatureSpec>) -> Result<Self> {
        if values.len() != spec.length() {
            return Err(Error::Argument(format!(
                "vector has {} values, spec {:?} declares {}",
                values.len(),
                spec,
                spec.length()
            )));
        }
        Ok(Self { values, spec })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec_id(&self) -> String {
        self.spec.spec_id()
    }
}

fn require_canonical(img: &crate::image::GrayImage) -> Result<()> {
    if img.width() != CANONICAL_WIDTH || img.height() != CANONICAL_HEIGHT {
        return Err(Error::Argument(format!(
            "expected a {CANONICAL_WIDTH}x{CANONICAL_HEIGHT} image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Concatenate feature vectors in the given order. The fusion spec records
/// each source segment so provenance survives.
pub fn fuse(components: &[&FeatureVector]) -> Result<FeatureVector> {
    if components.is_empty() {
        return Err(Error::Argument("fusion needs at least one component".into()));
    }
    let mut values = Vec::with_capacity(components.iter().map(|c| c.len()).sum());
    let mut parts = Vec::with_capacity(components.len());
    for c in components {
        values.extend_from_slice(&c.values);
        parts.push((*c.spec).clone());
    }
    let spec = Arc::new(FeatureSpec::Fusion { parts });
    FeatureVector::new(values, spec)
}

/// The canonical fusion of the paper's histograms: intensity histogram,
/// ULBP radii 1..8 concatenation, then HOG at grids 3, 5, 10
/// (256 + 472 + 180 + 500 + 2000 = 3,408 values).
pub fn canonical_fusion(img: &crate::image::GrayImage) -> Result<FeatureVector> {
    let parts = vec![
        intensity_histogram(img),
        ulbp_concat(img)?,
        hog_features(img, 3)?,
        hog_features(img, 5)?,
        hog_features(img, 10)?,
    ];
    fuse(&parts.iter().collect::<Vec<_>>())
}

/// Write vectors as columnar CSV: one row per image, `path` first, then one
/// column per feature index.
pub fn write_features_csv<W: std::io::Write>(
    rows: &[(String, &FeatureVector)],
    mut writer: W,
) -> Result<()> {
    let n = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut header = String::from("path");
    for i in 0..n {
        header.push_str(&format!(",f{i}"));
    }
    header.push('\n');
    writer.write_all(header.as_bytes())?;
    for (path, vec) in rows {
        if vec.len() != n {
            return Err(Error::Usage("feature rows have mismatched lengths".into()));
        }
        let mut line = String::with_capacity(16 * (n + 1));
        line.push_str(path);
        for v in &vec.values {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Read back a features CSV written by [`write_features_csv`]. Returns
/// (paths, value rows); leading `#` comment lines are skipped.
pub fn read_features_csv<R: std::io::Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut text = String::new();
    let mut r = reader;
    r.read_to_string(&mut text)?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Manifest { row: 0, msg: "empty features CSV".into() })?;
    if !header.starts_with("path") {
        return Err(Error::Manifest { row: 0, msg: "features CSV must start with a path column".into() });
    }
    let mut paths = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let path = fields.next().unwrap_or("").to_string();
        let mut row = Vec::new();
        for f in fields {
            row.push(f.parse::<f64>().map_err(|_| Error::Manifest {
                row: i + 1,
                msg: format!("bad feature value {f:?}"),
            })?);
        }
        paths.push(path);
        rows.push(row);
    }
    Ok((paths, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayImage;

    fn noise_image() -> GrayImage {
        let mut state = 0x12345678u32;
        GrayImage::from_fn(CANONICAL_WIDTH, CANONICAL_HEIGHT, |_, _| {
            state = state.wrapping_mul(1664525).wrapping_add(1013904223);
            (state >> 24) as u8
        })
    }

    #[test]
    fn fuse_single_component_is_identity_up_to_spec() {
        let img = noise_image();
        let hist = intensity_histogram(&img);
        let fused = fuse(&[&hist]).unwrap();
        assert_eq!(fused.values, hist.values);
    }

    #[test]
    fn fuse_rejects_empty_list() {
        assert!(fuse(&[]).is_err());
    }

    #[test]
    fn canonical_fusion_has_expected_length_and_segments() {
        let img = noise_image();
        let fused = canonical_fusion(&img).unwrap();
        assert_eq!(fused.len(), 3408);
        let segs = fused.spec.segments();
        let lens: Vec<usize> = segs.iter().map(|(s, e, _)| e - s).collect();
        assert_eq!(lens, vec![256, 472, 180, 500, 2000]);
        // Segment slices recover the originals exactly.
        let hist = intensity_histogram(&img);
        let (s, e, _) = segs[0];
        assert_eq!(&fused.values[s..e], hist.values.as_slice());
        let ulbp = ulbp_concat(&img).unwrap();
        let (s, e, _) = segs[1];
        assert_eq!(&fused.values[s..e], ulbp.values.as_slice());
        let hog10 = hog_features(&img, 10).unwrap();
        let (s, e, _) = segs[4];
        assert_eq!(&fused.values[s..e], hog10.values.as_slice());
    }

    #[test]
    fn origin_is_total_and_consistent() {
        let img = noise_image();
        let fused = canonical_fusion(&img).unwrap();
        for i in 0..fused.len() {
            fused.spec.origin(i).unwrap();
        }
        assert!(fused.spec.origin(fused.len()).is_err());
        // Spot checks across segment boundaries.
        assert_eq!(fused.spec.origin(0).unwrap(), IndexOrigin::IntensityBin { value: 0 });
        assert_eq!(fused.spec.origin(255).unwrap(), IndexOrigin::IntensityBin { value: 255 });
        assert_eq!(fused.spec.origin(256).unwrap(), IndexOrigin::UlbpBin { radius: 1, bin: 0 });
        assert_eq!(fused.spec.origin(256 + 59).unwrap(), IndexOrigin::UlbpBin { radius: 2, bin: 0 });
        assert_eq!(
            fused.spec.origin(256 + 472).unwrap(),
            IndexOrigin::HogBin { grid: 3, window_row: 0, window_col: 0, bin: 0 }
        );
        assert_eq!(
            fused.spec.origin(3407).unwrap(),
            IndexOrigin::HogBin { grid: 10, window_row: 9, window_col: 9, bin: 19 }
        );
    }

    #[test]
    fn raw_spec_maps_indices_to_pixels() {
        let spec = FeatureSpec::Raw { width: CANONICAL_WIDTH, height: CANONICAL_HEIGHT };
        assert_eq!(spec.pixel_locus(0).unwrap(), Some((0, 0)));
        assert_eq!(spec.pixel_locus(119).unwrap(), Some((119, 0)));
        assert_eq!(spec.pixel_locus(120).unwrap(), Some((0, 1)));
        assert_eq!(spec.pixel_locus(19_199).unwrap(), Some((119, 159)));
        assert_eq!(FeatureSpec::IntensityHist.pixel_locus(3).unwrap(), None);
    }

    #[test]
    fn spec_id_is_stable_and_parameter_sensitive() {
        let a = FeatureSpec::Ulbp { radius: 3 };
        let b = FeatureSpec::Ulbp { radius: 3 };
        let c = FeatureSpec::Ulbp { radius: 4 };
        assert_eq!(a.spec_id(), b.spec_id());
        assert_ne!(a.spec_id(), c.spec_id());
        let round = FeatureSpec::from_json(&a.to_json()).unwrap();
        assert_eq!(round, a);
    }

    #[test]
    fn features_csv_roundtrip() {
        let img = noise_image();
        let hist = intensity_histogram(&img);
        let ulbp = ulbp_histogram(&img, 2).unwrap();
        let rows = vec![("x.pgm".to_string(), &hist), ("y.pgm".to_string(), &ulbp)];
        let mut buf = Vec::new();
        // Mismatched row lengths are rejected.
        assert!(write_features_csv(&rows, &mut buf).is_err());

        let rows = vec![("x.pgm".to_string(), &hist), ("y.pgm".to_string(), &hist)];
        let mut buf = Vec::new();
        write_features_csv(&rows, &mut buf).unwrap();
        let (paths, values) = read_features_csv(buf.as_slice()).unwrap();
        assert_eq!(paths, vec!["x.pgm", "y.pgm"]);
        assert_eq!(values[0], hist.values);
        assert_eq!(values[1], hist.values);
    }
}
