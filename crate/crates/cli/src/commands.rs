//! Subcommand implementations. Every artifact embeds the effective config
//! hash and seed; reruns with identical inputs write byte-identical outputs.

use crate::config::Config;
use crate::pipeline::{self, Condition, ExperimentId};
use periocular::dataset::{make_split, Gender};
use periocular::error::{Error, Result};
use periocular::eval::{self, EvalReport};
use periocular::image::{apply_occlusion, encode_pgm_p5, encode_ppm_p6, resize_bilinear};
use periocular::learn::LearnerConfig;
use periocular::relevance;
use periocular::synth;
use periocular::{fanova, features, image};
use serde::Serialize;
use std::path::Path;

fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    // Skip the write when identical, keeping mtimes stable on reruns.
    if std::fs::read(path).map(|old| old == bytes).unwrap_or(false) {
        return Ok(());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn stamp(cfg: &Config) -> Result<String> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    Ok(format!("config={} seed={}", cfg.hash(), seed))
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PrepareReport {
    version: u32,
    config_sha256: String,
    seed: u64,
    condition: String,
    n_images: usize,
    cache_dir: String,
}

pub fn prepare(cfg: &Config, out: &Path) -> Result<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let condition = Condition::parse(cfg.get("condition").unwrap_or("non_occluded"))?;
    let train_fraction: f64 = cfg.get_or("train_fraction", 0.6)?;
    let folds: usize = cfg.get_or("folds", 5)?;
    let (records, manifest_path) = pipeline::load_records(cfg)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let plan = make_split(&records, train_fraction, folds, seed)?;
    write_if_changed(&pipeline::split_path(out), plan.to_json()?.as_bytes())?;

    let comment = stamp(cfg)?;
    let mut errors: Vec<String> = Vec::new();
    for (row, record) in records.iter().enumerate() {
        let src = {
            let p = Path::new(&record.image_path);
            if p.is_absolute() { p.to_path_buf() } else { manifest_dir.join(p) }
        };
        let circle = match (condition, record.occlusion) {
            (Condition::Occluded, None) => {
                errors.push(format!("{}: occluded condition but no occlusion circle", record.image_path));
                continue;
            }
            (Condition::Occluded, Some(c)) => Some(c),
            (Condition::NonOccluded, _) => None,
        };
        let bytes = match std::fs::read(&src) {
            Ok(b) => b,
            Err(e) => {
                errors.push(format!("{}: {e}", src.display()));
                continue;
            }
        };
        let img = match image::decode_pgm(&bytes) {
            Ok(i) => i,
            Err(e) => {
                errors.push(format!("{}: {e}", src.display()));
                continue;
            }
        };
        let img = resize_bilinear(&img, features::CANONICAL_WIDTH, features::CANONICAL_HEIGHT)?;
        let img = match circle {
            Some(c) => apply_occlusion(&img, &c),
            None => img,
        };
        write_if_changed(&pipeline::cache_image_path(out, row), &encode_pgm_p5(&img, Some(&comment)))?;
    }
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("prepare: {e}");
        }
        return Err(Error::Manifest {
            row: 0,
            msg: format!("{} image(s) failed to prepare", errors.len()),
        });
    }
    let report = PrepareReport {
        version: 1,
        config_sha256: cfg.hash(),
        seed,
        condition: condition.name().to_string(),
        n_images: records.len(),
        cache_dir: pipeline::cache_dir(out).display().to_string(),
    };
    write_if_changed(&out.join("prepare.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    println!("prepared {} images into {}", records.len(), pipeline::cache_dir(out).display());
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExperimentArchive {
    version: u32,
    config_sha256: String,
    config: std::collections::BTreeMap<String, String>,
    seed: u64,
    experiment: String,
    condition: String,
    learner: LearnerConfig,
    feature_length: usize,
    spec_id: String,
    n_images: usize,
    report: EvalReport,
}

pub fn experiment(cfg: &Config, out: &Path) -> Result<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let condition = Condition::parse(cfg.get("condition").unwrap_or("non_occluded"))?;
    let experiment = ExperimentId::parse(cfg.require("experiment")?)?;
    let (records, _) = pipeline::load_records(cfg)?;
    let plan = pipeline::load_plan(out)?;
    let images = pipeline::load_cached_images(out, records.len())?;
    let data = pipeline::extract_dataset(&records, &images, experiment)?;

    let learner = pipeline::learner_from_config(cfg)?;
    let folds = pipeline::fold_rows(&data, &plan);
    let learner = learner.resolve(&data, &folds, seed)?;
    let report = eval::cross_validate(&data, &plan, &learner, seed)?;

    let archive = ExperimentArchive {
        version: 1,
        config_sha256: cfg.hash(),
        config: cfg.entries().clone(),
        seed,
        experiment: experiment.name(),
        condition: condition.name().to_string(),
        learner: learner.clone(),
        feature_length: data.spec.length(),
        spec_id: data.spec.spec_id(),
        n_images: data.len(),
        report: report.clone(),
    };
    let base = format!("experiment_{}_{}", experiment.name(), learner.kind_name());
    write_if_changed(
        &out.join(format!("{base}.json")),
        serde_json::to_string_pretty(&archive)?.as_bytes(),
    )?;

    let mut table_rows = Vec::new();
    if let Some(metrics) = report.held_out.metrics() {
        let key = format!("{}/{}/{}", experiment.name(), condition.name(), learner.kind_name());
        table_rows.push((key, *metrics));
    }
    let mut table = format!("# {}\n", stamp(cfg)?);
    table.push_str(&eval::emit_table(&table_rows));
    write_if_changed(&out.join(format!("{base}.csv")), table.as_bytes())?;

    match (&report.fold_ccr_mean, &report.fold_ccr_stdev) {
        (Some(mean), Some(sd)) => {
            println!("{}: fold CCR {:.2} +/- {:.2}", experiment.name(), mean * 100.0, sd * 100.0)
        }
        _ => println!("{}: no evaluable folds", experiment.name()),
    }
    if let Some(m) = report.held_out.metrics() {
        println!(
            "{}: held-out CCR {:.2} TPR {:.2} TNR {:.2} MCC {:.4}",
            experiment.name(),
            m.ccr * 100.0,
            m.tpr * 100.0,
            m.tnr * 100.0,
            m.mcc
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// relevance
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RelevanceArchive {
    version: u32,
    config_sha256: String,
    config: std::collections::BTreeMap<String, String>,
    seed: u64,
    feature_length: usize,
    /// Features the relevance model ever split on; the full dimension and
    /// this count are both reported, never conflated.
    n_nonzero_importance: usize,
    sweep: Vec<relevance::SelectionResult>,
    overlays: Vec<String>,
}

pub fn relevance_cmd(cfg: &Config, out: &Path, thresholds: Option<Vec<f64>>) -> Result<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let experiment = ExperimentId::parse(cfg.get("experiment").unwrap_or("raw"))?;
    if experiment != ExperimentId::Raw {
        return Err(Error::Usage(
            "relevance overlays need the raw (pixel-indexed) extractor; set experiment = \"raw\"".into(),
        ));
    }
    let thresholds = match thresholds {
        Some(t) => t,
        None => cfg
            .get_list("thresholds")?
            .ok_or_else(|| Error::Usage("thresholds are required (config key or --thresholds)".into()))?,
    };
    let (records, _) = pipeline::load_records(cfg)?;
    let plan = pipeline::load_plan(out)?;
    let images = pipeline::load_cached_images(out, records.len())?;
    let data = pipeline::extract_dataset(&records, &images, experiment)?;

    let train = pipeline::subset_rows(&data, &pipeline::rows_in(&data, &plan.train_subjects))?;
    let test = pipeline::subset_rows(&data, &pipeline::rows_in(&data, &plan.test_subjects))?;

    let gbt_params = pipeline::gbt_params_from_config(cfg)?;
    let retrain = pipeline::learner_from_config(cfg)?;
    let folds = pipeline::fold_rows(&data, &plan);
    let retrain = retrain.resolve(&data, &folds, seed)?;

    let sweep = relevance::threshold_sweep(&train, &test, &thresholds, gbt_params, &retrain, seed)?;
    let csv = relevance::sweep_to_csv(&sweep, Some(&stamp(cfg)?));
    write_if_changed(&out.join("relevance_sweep.csv"), csv.as_bytes())?;

    // One importance model for the overlay series, trained on all train rows.
    let gbt = periocular::learn::train_gbt(&train, gbt_params, seed)?;
    let importance = relevance::importance_from_gbt(&gbt)?;
    let top_n_series: Vec<usize> = cfg
        .get_list("overlay_top_n")?
        .unwrap_or_else(|| vec![1000, 2000, 3000, 5000, 10000]);
    // Fig-style base: the first female test-subject image, else the first image.
    let base_row = (0..records.len())
        .find(|&i| {
            records[i].gender == Gender::Female && plan.test_subjects.contains(&records[i].subject_id)
        })
        .unwrap_or(0);
    let mut overlays = Vec::new();
    for top_n in top_n_series {
        let overlay = relevance::render_overlay(&importance, &data.spec, top_n, &images[base_row])?;
        let name = format!("overlay_top{top_n}.ppm");
        write_if_changed(&out.join(&name), &encode_ppm_p6(&overlay, Some(&stamp(cfg)?)))?;
        overlays.push(name);
    }

    let archive = RelevanceArchive {
        version: 1,
        config_sha256: cfg.hash(),
        config: cfg.entries().clone(),
        seed,
        feature_length: data.spec.length(),
        n_nonzero_importance: importance.n_nonzero(),
        sweep,
        overlays,
    };
    write_if_changed(&out.join("relevance.json"), serde_json::to_string_pretty(&archive)?.as_bytes())?;
    println!("relevance sweep over {} thresholds written to {}", thresholds.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fanova
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct FanovaArchive {
    version: u32,
    config_sha256: String,
    statistic: f64,
    p_value: f64,
    n_boot: usize,
    seed: u64,
    reject_null: bool,
    verdict: String,
}

pub fn fanova_cmd(cfg: &Config, curves: &Path, out: Option<&Path>) -> Result<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let n_boot: usize = cfg.get_or("n_boot", 1000)?;
    let text = std::fs::read_to_string(curves)
        .map_err(|e| Error::Manifest { row: 0, msg: format!("cannot read {}: {e}", curves.display()) })?;
    let groups = fanova::parse_curves_csv(&text)?;
    let result = fanova::fanova_test(&groups, n_boot, seed)?;
    let archive = FanovaArchive {
        version: 1,
        config_sha256: cfg.hash(),
        statistic: result.statistic,
        p_value: result.p_value,
        n_boot: result.n_boot,
        seed: result.seed,
        reject_null: result.reject_null,
        verdict: if result.reject_null { "reject".into() } else { "fail_to_reject".into() },
    };
    let json = serde_json::to_string_pretty(&archive)?;
    println!("{json}");
    if let Some(out) = out {
        write_if_changed(&out.join("fanova.json"), json.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SynthReport {
    version: u32,
    config_sha256: String,
    seed: u64,
    n_subjects: usize,
    images_per_subject: usize,
    manifest: String,
}

pub fn synth_cmd(cfg: &Config, out: &Path) -> Result<()> {
    let config = synth::SynthConfig {
        n_subjects: cfg.get_or("synth_subjects", 100)?,
        images_per_subject: cfg.get_or("synth_images_per_subject", 4)?,
        seed: cfg.get_or("seed", 0)?,
        ..Default::default()
    };
    let samples = synth::generate(&config);
    let manifest = synth::write_to_dir(&samples, out)?;
    let report = SynthReport {
        version: 1,
        config_sha256: cfg.hash(),
        seed: config.seed,
        n_subjects: config.n_subjects,
        images_per_subject: config.images_per_subject,
        manifest: manifest.display().to_string(),
    };
    write_if_changed(&out.join("synth.json"), serde_json::to_string_pretty(&report)?.as_bytes())?;
    println!("wrote {} synthetic images and {}", samples.len(), manifest.display());
    Ok(())
}
