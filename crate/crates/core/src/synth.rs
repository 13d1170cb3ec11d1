//! Synthetic periocular benchmark generator.
//!
//! Produces labeled 120x160 images whose class signal lives, by
//! construction, only in an annulus around the image center: the female
//! class gets a brighter, smooth (low-frequency) texture there, the male
//! class a rough high-variance one. Everything else, including the central
//! "iris" disk, is drawn from one shared background distribution, so the
//! disk is statistically identical across classes and can be masked without
//! losing class information.

use crate::dataset::{Eye, Gender, SampleRecord};
use crate::error::Result;
use crate::features::{CANONICAL_HEIGHT, CANONICAL_WIDTH};
use crate::image::{encode_pgm_p5, GrayImage, OcclusionCircle};
use crate::seed;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_subjects: usize,
    pub images_per_subject: usize,
    pub seed: u64,
    /// Iris radius; doubles as the annulus inner radius.
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_subjects: 100,
            images_per_subject: 4,
            seed: 0,
            inner_radius: 25.0,
            outer_radius: 55.0,
        }
    }
}

impl SynthConfig {
    pub fn center(&self) -> (f64, f64) {
        (CANONICAL_WIDTH as f64 / 2.0, CANONICAL_HEIGHT as f64 / 2.0)
    }

    pub fn iris_circle(&self) -> OcclusionCircle {
        let (cx, cy) = self.center();
        OcclusionCircle::new(cx, cy, self.inner_radius).expect("radius >= 0")
    }

    fn radius_of(&self, x: usize, y: usize) -> f64 {
        let (cx, cy) = self.center();
        let dx = (x as f64 + 0.5) - cx;
        let dy = (y as f64 + 0.5) - cy;
        (dx * dx + dy * dy).sqrt()
    }

    /// Pixel lies in the class-informative ring.
    pub fn in_annulus(&self, x: usize, y: usize) -> bool {
        let r = self.radius_of(x, y);
        r > self.inner_radius && r <= self.outer_radius
    }

    /// Pixel lies in the signal-free iris disk.
    pub fn in_iris(&self, x: usize, y: usize) -> bool {
        self.radius_of(x, y) <= self.inner_radius
    }
}

#[derive(Debug, Clone)]
pub struct SynthSample {
    pub record: SampleRecord,
    pub image: GrayImage,
}

const BASE_INTENSITY: f64 = 115.0;
const BASE_SPREAD: f64 = 8.0;
const BACKGROUND_NOISE: f64 = 10.0;
const FEMALE_SHIFT: f64 = 25.0;
const FEMALE_TEXTURE_AMP: f64 = 10.0;
const FEMALE_NOISE: f64 = 5.0;
const MALE_SPREAD: f64 = 50.0;

/// One subject's images share a base intensity; each image draws fresh
/// texture phases and noise.
fn render_image(
    config: &SynthConfig,
    base: f64,
    gender: Gender,
    image_index: u64,
) -> GrayImage {
    let mut rng = seed::rng_for(config.seed, 1_000_000 + image_index);
    let bg = Normal::new(0.0, BACKGROUND_NOISE).expect("valid sigma");
    let fine = Normal::new(0.0, FEMALE_NOISE).expect("valid sigma");
    let tau = std::f64::consts::TAU;
    // Texture wavelengths for the smooth (female) field: a few pixels, so
    // the field is locally coherent (unlike the male iid roughness) while
    // neighboring pixels decorrelate quickly across the ring.
    let lx = rng.gen_range(3.0..6.0);
    let ly = rng.gen_range(3.0..6.0);
    let ld = rng.gen_range(4.0..8.0);
    let p1 = rng.gen_range(0.0..tau);
    let p2 = rng.gen_range(0.0..tau);
    let p3 = rng.gen_range(0.0..tau);
    GrayImage::from_fn(CANONICAL_WIDTH, CANONICAL_HEIGHT, |x, y| {
        let v = if config.in_annulus(x, y) {
            match gender {
                Gender::Female => {
                    let smooth = FEMALE_TEXTURE_AMP
                        * (tau * x as f64 / lx + p1).sin()
                        * (tau * y as f64 / ly + p2).cos()
                        + 0.5 * FEMALE_TEXTURE_AMP * (tau * (x + y) as f64 / ld + p3).sin();
                    base + FEMALE_SHIFT + smooth + fine.sample(&mut rng)
                }
                Gender::Male => base + rng.gen_range(-MALE_SPREAD..MALE_SPREAD),
            }
        } else {
            base + bg.sample(&mut rng)
        };
        v.round().clamp(0.0, 255.0) as u8
    })
}

/// Generate the benchmark corpus: `n_subjects` alternating female/male, each
/// with `images_per_subject` images, every record carrying the iris circle.
pub fn generate(config: &SynthConfig) -> Vec<SynthSample> {
    let mut samples = Vec::with_capacity(config.n_subjects * config.images_per_subject);
    for s in 0..config.n_subjects {
        let gender = if s % 2 == 0 { Gender::Female } else { Gender::Male };
        let mut subject_rng = seed::rng_for(config.seed, s as u64);
        let base = BASE_INTENSITY + subject_rng.gen_range(-BASE_SPREAD..BASE_SPREAD);
        for i in 0..config.images_per_subject {
            let image_index = (s * config.images_per_subject + i) as u64;
            let image = render_image(config, base, gender, image_index);
            let record = SampleRecord {
                image_path: format!("s{s:03}_{i}.pgm"),
                subject_id: format!("s{s:03}"),
                gender,
                eye: if i % 2 == 0 { Eye::Left } else { Eye::Right },
                session: None,
                occlusion: Some(config.iris_circle()),
            };
            samples.push(SynthSample { record, image });
        }
    }
    samples
}

/// Write images as P5 PGMs plus a `manifest.csv` into `dir`; paths in the
/// manifest are relative to the directory. Returns the manifest path.
pub fn write_to_dir(samples: &[SynthSample], dir: &std::path::Path) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    for s in samples {
        std::fs::write(dir.join(&s.record.image_path), encode_pgm_p5(&s.image, None))?;
    }
    let records: Vec<SampleRecord> = samples.iter().map(|s| s.record.clone()).collect();
    let manifest_path = dir.join("manifest.csv");
    let file = std::fs::File::create(&manifest_path)?;
    crate::dataset::write_manifest(&records, file)?;
    Ok(manifest_path)
}
