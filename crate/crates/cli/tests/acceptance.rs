//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Oracles here are written from first principles, independent of the
//! library code paths they audit.

use periocular::dataset::{make_split, SplitPlan};
use periocular::features::{
    self, hog_features, hog_window_histograms, raw_features, ulbp_concat, ulbp_histogram,
    FeatureVector,
};
use periocular::image::{apply_occlusion, GrayImage};
use periocular::learn::{self, GbtParams, LabeledSet, LearnerConfig, SvmParams};
use periocular::relevance;
use periocular::seed;
use periocular::synth::{self, SynthConfig};
use periocular::{eval, fanova};
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

fn verdict(criterion: &str, ok: bool, detail: &str) {
    println!("ACCEPTANCE {criterion}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{criterion}: {detail}");
}

fn random_image(w: usize, h: usize, seed_value: u64) -> GrayImage {
    let mut rng = seed::rng(seed_value);
    GrayImage::from_fn(w, h, |_, _| rng.gen::<u8>())
}

// ---------------------------------------------------------------------------
// 1. ULBP oracle equivalence
// ---------------------------------------------------------------------------

/// First-principles ULBP(8,R) histogram: angles, interpolation, tolerance,
/// uniformity and bin layout all re-derived.
fn ulbp_oracle(img: &GrayImage, radius: u32) -> Vec<f64> {
    let uniform = |p: u8| -> bool {
        let mut t = 0;
        for k in 0..8 {
            if (p >> k) & 1 != (p >> ((k + 1) % 8)) & 1 {
                t += 1;
            }
        }
        t <= 2
    };
    let bin_of = |p: u8| -> usize {
        if uniform(p) {
            (0..p).filter(|&q| uniform(q)).count()
        } else {
            58
        }
    };
    let r = radius as usize;
    let mut counts = vec![0u64; 59];
    for y in r..img.height() - r {
        for x in r..img.width() - r {
            let center = img.getf(x, y);
            let mut pattern = 0u8;
            for k in 0..8 {
                let theta = std::f64::consts::TAU * k as f64 / 8.0;
                let (mut dx, mut dy) = (radius as f64 * theta.cos(), -(radius as f64) * theta.sin());
                if (dx - dx.round()).abs() < 1e-9 {
                    dx = dx.round();
                }
                if (dy - dy.round()).abs() < 1e-9 {
                    dy = dy.round();
                }
                let (xs, ys) = (x as f64 + dx, y as f64 + dy);
                let (x0, y0) = (xs.floor(), ys.floor());
                let (fx, fy) = (xs - x0, ys - y0);
                let px = |xx: f64, yy: f64| {
                    img.getf(
                        (xx as usize).min(img.width() - 1),
                        (yy as usize).min(img.height() - 1),
                    )
                };
                let t = px(x0, y0) * (1.0 - fx) * (1.0 - fy)
                    + px(x0 + 1.0, y0) * fx * (1.0 - fy)
                    + px(x0, y0 + 1.0) * (1.0 - fx) * fy
                    + px(x0 + 1.0, y0 + 1.0) * fx * fy;
                if t >= center - 1e-6 {
                    pattern |= 1 << k;
                }
            }
            counts[bin_of(pattern)] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

#[test]
fn acceptance_01_ulbp_oracle_equivalence() {
    let start = Instant::now();
    let mut all_match = true;
    for trial in 0..50 {
        let img = random_image(16, 16, 1000 + trial);
        let got = ulbp_histogram(&img, 1).unwrap();
        if got.values != ulbp_oracle(&img, 1) {
            all_match = false;
            break;
        }
    }
    let elapsed = start.elapsed();
    let ok = all_match && elapsed.as_secs_f64() < 5.0;
    verdict(
        "1 (ULBP oracle equivalence)",
        ok,
        &format!("50 random 16x16 images bit-identical in {:.2}s", elapsed.as_secs_f64()),
    );
}

// ---------------------------------------------------------------------------
// 2. Uniform-pattern census
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_uniform_pattern_census() {
    let transitions = |p: u8| -> u32 {
        (0..8u32).filter(|&k| (p >> k) & 1 != (p >> ((k + 1) % 8)) & 1).count() as u32
    };
    let uniform_count = (0..=255u8).filter(|&p| transitions(p) <= 2).count();
    let table = features::UlbpTable::shared();
    let mut bins: std::collections::BTreeSet<usize> = Default::default();
    for p in 0..=255u8 {
        bins.insert(table.bin(p));
    }
    let ok = uniform_count == 58 && bins.len() == 59 && features::ULBP_BINS == 59;
    verdict(
        "2 (uniform-pattern census)",
        ok,
        &format!("{uniform_count} uniform patterns, {} table bins", bins.len()),
    );
}

// ---------------------------------------------------------------------------
// 3. Concatenation length
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_concat_length_472() {
    let img = random_image(120, 160, 3);
    let v = ulbp_concat(&img).unwrap();
    verdict("3 (ULBP concat length)", v.len() == 472, &format!("length {}", v.len()));
}

// ---------------------------------------------------------------------------
// 4. HOG length and window mass
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_hog_length_and_mass() {
    let img = random_image(120, 160, 4);
    let mut ok = true;
    let mut detail = String::new();
    for grid in [3usize, 5, 10] {
        let v = hog_features(&img, grid).unwrap();
        if v.len() != 20 * grid * grid {
            ok = false;
            detail = format!("grid {grid}: length {} != {}", v.len(), 20 * grid * grid);
            break;
        }
        // Independent window-mass accumulation from raw gradients.
        let windows = hog_window_histograms(&img, grid).unwrap();
        let x_edges: Vec<usize> = (0..=grid).map(|i| i * 120 / grid).collect();
        let y_edges: Vec<usize> = (0..=grid).map(|i| i * 160 / grid).collect();
        let mut mass = vec![0.0f64; grid * grid];
        for y in 1..159 {
            for x in 1..119 {
                let h = img.getf(x + 1, y) - img.getf(x - 1, y);
                let vg = img.getf(x, y + 1) - img.getf(x, y - 1);
                let wx = (0..grid).find(|&i| x < x_edges[i + 1]).unwrap();
                let wy = (0..grid).find(|&i| y < y_edges[i + 1]).unwrap();
                mass[wy * grid + wx] += (vg * vg + h * h).sqrt();
            }
        }
        for (w, expected) in windows.iter().zip(&mass) {
            let got: f64 = w.iter().sum();
            let rel =
                if *expected == 0.0 { got.abs() } else { (got - expected).abs() / expected };
            if rel >= 1e-9 {
                ok = false;
                detail = format!("grid {grid}: window mass off by {rel:e}");
            }
        }
    }
    if detail.is_empty() {
        detail = "lengths 180/500/2000, window masses within 1e-9 relative".into();
    }
    verdict("4 (HOG length and mass)", ok, &detail);
}

// ---------------------------------------------------------------------------
// 5. SMO vs dense-QP oracle
// ---------------------------------------------------------------------------

/// Exact box-QP maximizer by active-set enumeration: every assignment of
/// each alpha to {0, C, free} is solved by a dense linear system and checked
/// against the KKT conditions. For a PSD kernel this finds the global optimum.
fn qp_oracle(x: &[Vec<f64>], y: &[i8], c: f64, gamma: f64) -> (f64, Vec<f64>, f64) {
    let n = x.len();
    let mut q = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            q[i][j] = f64::from(y[i]) * f64::from(y[j])
                * learn::svm::gaussian_kernel(&x[i], &x[j], gamma);
        }
    }
    let objective = |alpha: &[f64]| -> f64 {
        let mut w: f64 = alpha.iter().sum();
        for i in 0..n {
            for j in 0..n {
                w -= 0.5 * alpha[i] * alpha[j] * q[i][j];
            }
        }
        w
    };
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut assignment = vec![0u8; n]; // 0 => alpha=0, 1 => alpha=C, 2 => free
    loop {
        // Solve the stationarity system for this active set.
        let free: Vec<usize> = (0..n).filter(|&i| assignment[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for i in 0..n {
            if assignment[i] == 1 {
                alpha[i] = c;
            }
        }
        let m = free.len();
        let mut feasible = true;
        let mut bias = 0.0;
        if m > 0 {
            // [Q_FF  -y_F][a_F]   [1 - Q_FB a_B]
            // [y_F^T   0 ][ b ] = [-y_B^T a_B]
            let dim = m + 1;
            let mut mat = vec![vec![0.0; dim + 1]; dim];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    mat[r][cidx] = q[i][j];
                }
                mat[r][m] = -f64::from(y[i]);
                let mut rhs = 1.0;
                for j in 0..n {
                    if assignment[j] == 1 {
                        rhs -= q[i][j] * c;
                    }
                }
                mat[r][dim] = rhs;
            }
            for (cidx, &j) in free.iter().enumerate() {
                mat[m][cidx] = f64::from(y[j]);
            }
            let mut rhs = 0.0;
            for j in 0..n {
                if assignment[j] == 1 {
                    rhs -= f64::from(y[j]) * c;
                }
            }
            mat[m][dim] = rhs;
            // Gaussian elimination with partial pivoting.
            for col in 0..dim {
                let pivot = (col..dim).max_by(|&a, &b| {
                    mat[a][col].abs().partial_cmp(&mat[b][col].abs()).unwrap()
                });
                let Some(p) = pivot else { feasible = false; break };
                if mat[p][col].abs() < 1e-12 {
                    feasible = false;
                    break;
                }
                mat.swap(col, p);
                for r in 0..dim {
                    if r != col {
                        let f = mat[r][col] / mat[col][col];
                        for k in col..=dim {
                            mat[r][k] -= f * mat[col][k];
                        }
                    }
                }
            }
            if feasible {
                for (r, &i) in free.iter().enumerate() {
                    alpha[i] = mat[r][dim] / mat[r][r];
                    if !(alpha[i] >= -1e-9 && alpha[i] <= c + 1e-9) {
                        feasible = false;
                        break;
                    }
                }
                bias = mat[m][dim] / mat[m][m];
            }
        } else {
            // No free variables: the equality constraint must already hold
            // and some bias must satisfy every bound's KKT sign.
            let s: f64 = (0..n).map(|i| alpha[i] * f64::from(y[i])).sum();
            if s.abs() > 1e-9 {
                feasible = false;
            }
        }
        if feasible {
            // KKT signs for the bound variables: grad_i = 1 - (Q a)_i and
            // grad_i + b*y_i must be <= 0 at alpha=0, >= 0 at alpha=C.
            // With free variables the bias is fixed; otherwise intersect.
            let grad: Vec<f64> = (0..n)
                .map(|i| 1.0 - (0..n).map(|j| q[i][j] * alpha[j]).sum::<f64>())
                .collect();
            if m > 0 {
                for i in 0..n {
                    let g = grad[i] + bias * f64::from(y[i]);
                    let ok = match assignment[i] {
                        0 => g <= 1e-7,
                        1 => g >= -1e-7,
                        _ => true,
                    };
                    if !ok {
                        feasible = false;
                        break;
                    }
                }
            } else {
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for i in 0..n {
                    // constraint: grad_i + b*y_i <= 0 (alpha=0) or >= 0 (alpha=C)
                    let yi = f64::from(y[i]);
                    match assignment[i] {
                        0 => {
                            if yi > 0.0 {
                                hi = hi.min(-grad[i]);
                            } else {
                                lo = lo.max(grad[i]);
                            }
                        }
                        1 => {
                            if yi > 0.0 {
                                lo = lo.max(-grad[i]);
                            } else {
                                hi = hi.min(grad[i]);
                            }
                        }
                        _ => {}
                    }
                }
                if lo > hi + 1e-7 {
                    feasible = false;
                } else {
                    bias = (lo.max(-1e6) + hi.min(1e6)) / 2.0;
                }
            }
            if feasible {
                let w = objective(&alpha);
                if best.as_ref().map_or(true, |(bw, _, _)| w > *bw) {
                    best = Some((w, alpha.clone(), bias));
                }
            }
        }
        // Next ternary assignment.
        let mut k = 0;
        loop {
            if k == n {
                let (w, alpha, _) = best.expect("QP oracle found a feasible point");
                // Decision-space bias via the shared convention: mean of
                // y_i - u_i over free duals, else the KKT-feasible midpoint.
                let u = |i: usize| -> f64 {
                    (0..n)
                        .map(|j| {
                            alpha[j]
                                * f64::from(y[j])
                                * learn::svm::gaussian_kernel(&x[j], &x[i], gamma)
                        })
                        .sum()
                };
                let free: Vec<usize> =
                    (0..n).filter(|&i| alpha[i] > 1e-9 && alpha[i] < c - 1e-9).collect();
                let b_dec = if !free.is_empty() {
                    free.iter().map(|&i| f64::from(y[i]) - u(i)).sum::<f64>() / free.len() as f64
                } else {
                    let mut lo = f64::NEG_INFINITY;
                    let mut hi = f64::INFINITY;
                    for i in 0..n {
                        let yi = f64::from(y[i]);
                        let bound = yi - u(i);
                        let at_zero = alpha[i] <= 1e-9;
                        if (at_zero && yi > 0.0) || (!at_zero && yi < 0.0) {
                            lo = lo.max(bound);
                        } else {
                            hi = hi.min(bound);
                        }
                    }
                    match (lo.is_finite(), hi.is_finite()) {
                        (true, true) => (lo + hi) / 2.0,
                        (true, false) => lo,
                        (false, true) => hi,
                        (false, false) => 0.0,
                    }
                };
                return (w, alpha, b_dec);
            }
            assignment[k] += 1;
            if assignment[k] == 3 {
                assignment[k] = 0;
                k += 1;
            } else {
                break;
            }
        }
    }
}

#[test]
fn acceptance_05_smo_matches_qp_oracle() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    let mut rng = seed::rng(505);
    for trial in 0..20 {
        let n = rng.gen_range(4..=8);
        let x: Vec<Vec<f64>> =
            (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let mut y: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        if !y.contains(&1) {
            y[0] = 1;
        }
        if !y.contains(&-1) {
            y[n - 1] = -1;
        }
        let c = [1.0, 5.0, 20.0][trial % 3];
        let gamma = [0.5, 1.0, 3.0][trial % 3];
        let model =
            learn::svm::train(&x, &y, SvmParams { c, gamma, tol: 1e-5 }, trial as u64).unwrap();
        let (oracle_obj, oracle_alpha, oracle_bias) = qp_oracle(&x, &y, c, gamma);
        let gap = (model.dual_objective - oracle_obj).abs();
        if gap > 1e-3 {
            ok = false;
            detail = format!("trial {trial}: objective gap {gap:.2e}");
            break;
        }
        let oracle_decision = |p: &[f64]| -> f64 {
            let mut f = oracle_bias;
            for i in 0..n {
                f += oracle_alpha[i]
                    * f64::from(y[i])
                    * learn::svm::gaussian_kernel(&x[i], p, gamma);
            }
            f
        };
        for _ in 0..100 {
            let p = vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            if (model.decision(&p) > 0.0) != (oracle_decision(&p) > 0.0) {
                ok = false;
                detail = format!("trial {trial}: sign mismatch at probe {p:?}");
                break;
            }
        }
        if !ok {
            break;
        }
    }
    let elapsed = start.elapsed();
    if ok && elapsed.as_secs_f64() >= 10.0 {
        ok = false;
        detail = format!("took {:.1}s (budget 10s)", elapsed.as_secs_f64());
    }
    if detail.is_empty() {
        detail = format!(
            "20 problems within 1e-3 dual gap, 100 probe signs each, {:.2}s",
            elapsed.as_secs_f64()
        );
    }
    verdict("5 (SMO vs dense-QP oracle)", ok, &detail);
}

// ---------------------------------------------------------------------------
// 6. Tree-split oracle
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_tree_split_oracle() {
    let mut ok = true;
    let mut detail = String::from("20 random 8x3 sets match exhaustive Gini enumeration");
    for trial in 0..20u64 {
        let mut rng = seed::rng(606 + trial);
        let x: Vec<Vec<f64>> =
            (0..8).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let mut y: Vec<i8> = (0..8).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        if !y.contains(&1) {
            y[0] = 1;
        }
        if !y.contains(&-1) {
            y[7] = -1;
        }
        let tree = learn::tree::fit_classification(
            &x,
            &y,
            &vec![1.0; 8],
            learn::TreeOptions { max_depth: Some(1), ..Default::default() },
            &mut seed::rng(0),
        );
        // Exhaustive enumeration with count-weighted Gini mass.
        let gini = |neg: f64, pos: f64| {
            let t = neg + pos;
            if t == 0.0 {
                0.0
            } else {
                t - (neg * neg + pos * pos) / t
            }
        };
        let (tn, tp) =
            y.iter().fold((0.0, 0.0), |(n, p), &v| if v > 0 { (n, p + 1.0) } else { (n + 1.0, p) });
        let parent = gini(tn, tp);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..3 {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.dedup();
            for pair in vals.windows(2) {
                let t = (pair[0] + pair[1]) / 2.0;
                let (mut ln, mut lp) = (0.0, 0.0);
                for i in 0..8 {
                    if x[i][f] < t {
                        if y[i] > 0 {
                            lp += 1.0;
                        } else {
                            ln += 1.0;
                        }
                    }
                }
                let gain = parent - gini(ln, lp) - gini(tn - ln, tp - lp);
                if gain > 1e-12 && best.as_ref().map_or(true, |(bg, _, _)| gain > bg + 1e-12) {
                    best = Some((gain, f, t));
                }
            }
        }
        let expected = best.map(|(_, f, t)| (f, t));
        if tree.root_split() != expected {
            ok = false;
            detail = format!("trial {trial}: {:?} != {expected:?}", tree.root_split());
            break;
        }
    }
    verdict("6 (tree-split oracle)", ok, &detail);
}

// ---------------------------------------------------------------------------
// 7. Synthetic periocular benchmark
// ---------------------------------------------------------------------------

fn extract_all(
    images: &[GrayImage],
    f: impl Fn(&GrayImage) -> periocular::error::Result<FeatureVector> + Sync,
) -> Vec<FeatureVector> {
    images.par_iter().map(|img| f(img).unwrap()).collect()
}

fn labeled(
    vectors: Vec<FeatureVector>,
    samples: &[synth::SynthSample],
) -> LabeledSet {
    LabeledSet::from_vectors(
        &vectors,
        samples.iter().map(|s| s.record.gender.label()).collect(),
        samples.iter().map(|s| s.record.subject_id.clone()).collect(),
    )
    .unwrap()
}

fn held_out_ccr(data: &LabeledSet, plan: &SplitPlan, learner: &LearnerConfig, s: u64) -> f64 {
    let report = eval::cross_validate(data, plan, learner, s).unwrap();
    match report.held_out {
        eval::FoldResult::Evaluated { metrics, .. } => metrics.ccr,
        eval::FoldResult::Skipped { reason } => panic!("held-out skipped: {reason}"),
    }
}

fn fold_rows(data: &LabeledSet, plan: &SplitPlan) -> Vec<(Vec<usize>, Vec<usize>)> {
    plan.folds
        .iter()
        .map(|fold| {
            let train =
                (0..data.len()).filter(|&i| fold.train.contains(&data.subject_ids[i])).collect();
            let val = (0..data.len())
                .filter(|&i| fold.validation.contains(&data.subject_ids[i]))
                .collect();
            (train, val)
        })
        .collect()
}

#[test]
fn acceptance_07_synthetic_benchmark() {
    let start = Instant::now();
    let config = SynthConfig { n_subjects: 100, images_per_subject: 4, seed: 2026, ..Default::default() };
    let samples = synth::generate(&config);
    assert_eq!(samples.len(), 400);
    let records: Vec<_> = samples.iter().map(|s| s.record.clone()).collect();
    let plan = make_split(&records, 0.6, 5, 71).unwrap();
    let images: Vec<GrayImage> = samples.iter().map(|s| s.image.clone()).collect();

    // (a) ULBP-concat + grid-searched Gaussian SVM on held-out subjects.
    let data = labeled(extract_all(&images, ulbp_concat), &samples);
    let folds = fold_rows(&data, &plan);
    let learner = LearnerConfig::Svm { c: None, gamma: None, tol: 1e-3 }
        .resolve(&data, &folds, 7)
        .unwrap();
    let ccr_plain = held_out_ccr(&data, &plan, &learner, 7);
    let ok_a = ccr_plain >= 0.90;
    verdict(
        "7a (synthetic ULBP+SVM CCR >= 90%)",
        ok_a,
        &format!("held-out CCR {:.2}% with {learner:?}", ccr_plain * 100.0),
    );

    // (b) Same pipeline under iris occlusion; gap at most 5 points.
    let occluded: Vec<GrayImage> = images
        .par_iter()
        .zip(&records)
        .map(|(img, r)| apply_occlusion(img, &r.occlusion.unwrap()))
        .collect();
    let data_occ = labeled(extract_all(&occluded, ulbp_concat), &samples);
    let learner_occ = LearnerConfig::Svm { c: None, gamma: None, tol: 1e-3 }
        .resolve(&data_occ, &fold_rows(&data_occ, &plan), 7)
        .unwrap();
    let ccr_occ = held_out_ccr(&data_occ, &plan, &learner_occ, 7);
    let gap = (ccr_plain - ccr_occ).abs();
    let ok_b = gap <= 0.05;
    verdict(
        "7b (occlusion gap <= 5 points)",
        ok_b,
        &format!("non-occluded {:.2}% vs occluded {:.2}%, gap {:.2} points", ccr_plain * 100.0, ccr_occ * 100.0, gap * 100.0),
    );

    // (c) Raw-pixel GBT relevance localizes to the annulus.
    let raw = labeled(extract_all(&images, raw_features), &samples);
    let train_rows: Vec<usize> =
        (0..raw.len()).filter(|&i| plan.train_subjects.contains(&raw.subject_ids[i])).collect();
    let train = LabeledSet::new(
        train_rows.iter().map(|&i| raw.features[i].clone()).collect(),
        train_rows.iter().map(|&i| raw.labels[i]).collect(),
        train_rows.iter().map(|&i| raw.subject_ids[i].clone()).collect(),
        raw.spec.clone(),
    )
    .unwrap();
    let gbt = learn::train_gbt(
        &train,
        GbtParams { n_rounds: 300, learning_rate: 0.1, max_depth: 3, lambda: 1.0, min_leaf: 1 },
        7,
    )
    .unwrap();
    let importance = relevance::importance_from_gbt(&gbt).unwrap();
    let top = relevance::select_top_n(&importance, 1000);
    let mut in_annulus = 0usize;
    let mut in_iris = 0usize;
    for &i in &top {
        let (x, y) = raw.spec.pixel_locus(i).unwrap().expect("raw spec has pixel loci");
        if config.in_annulus(x, y) {
            in_annulus += 1;
        }
        if config.in_iris(x, y) {
            in_iris += 1;
        }
    }
    let annulus_frac = in_annulus as f64 / top.len() as f64;
    let iris_frac = in_iris as f64 / top.len() as f64;
    let ok_c = annulus_frac >= 0.80 && iris_frac <= 0.05;
    verdict(
        "7c (relevance localization)",
        ok_c,
        &format!(
            "top-{} pixels: {:.1}% annulus, {:.1}% iris ({} nonzero importances)",
            top.len(),
            annulus_frac * 100.0,
            iris_frac * 100.0,
            importance.n_nonzero()
        ),
    );

    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "7 (synthetic benchmark runtime)",
        elapsed < 300.0,
        &format!("finished in {elapsed:.1}s (budget 300s)"),
    );
}

// ---------------------------------------------------------------------------
// 8. Threshold sweep monotonicity
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_threshold_monotonicity() {
    let mut rng = seed::rng(808);
    let scores: Vec<f64> = (0..500).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() }).collect();
    let imp = relevance::ImportanceMap::from_raw_gains(scores).into_unit_sum();
    let max = imp.scores.iter().cloned().fold(0.0f64, f64::max);
    let thresholds: Vec<f64> = (0..10).map(|i| max * i as f64 / 8.0).collect();
    let mut ok = true;
    let mut prev: Option<std::collections::BTreeSet<usize>> = None;
    let mut prev_len = usize::MAX;
    for &t in &thresholds {
        let sel: std::collections::BTreeSet<usize> =
            relevance::select_by_threshold(&imp, t).into_iter().collect();
        if sel.len() > prev_len {
            ok = false;
        }
        if let Some(p) = &prev {
            if !sel.is_subset(p) {
                ok = false;
            }
        }
        prev_len = sel.len();
        prev = Some(sel);
    }
    verdict("8 (threshold sweep monotonicity)", ok, "10 increasing thresholds: counts non-increasing, selections nested");
}

// ---------------------------------------------------------------------------
// 9. Metric identities
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_metric_identities() {
    let mut rng = seed::rng(909);
    let mut ok = true;
    for _ in 0..1000 {
        let c = eval::ConfusionCounts::new(
            rng.gen_range(0..100),
            rng.gen_range(0..100),
            rng.gen_range(0..100),
            rng.gen_range(0..100),
        );
        if c.total() == 0 {
            continue;
        }
        let m = c.metrics().unwrap();
        let p = (c.tp + c.fneg) as f64;
        let n = (c.tn + c.fp) as f64;
        let identity = (m.tpr * p + m.tnr * n) / (p + n);
        if (m.ccr - identity).abs() > 1e-12 || m.mcc < -1.0 - 1e-12 || m.mcc > 1.0 + 1e-12 {
            ok = false;
            break;
        }
    }
    let pinned = eval::ConfusionCounts::new(3, 1, 2, 1).metrics().unwrap();
    let ok = ok && pinned.mcc == 5.0 / 12.0;
    verdict(
        "9 (metric identities)",
        ok,
        &format!("1000 random matrices hold CCR identity; MCC(3,2,1,1) = {}", pinned.mcc),
    );
}

// ---------------------------------------------------------------------------
// 10. fANOVA calibration
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_fanova_calibration() {
    let start = Instant::now();
    // Identical groups: statistic exactly 0, p exactly 1.
    let flat = vec![vec![0.8, 0.82, 0.84, 0.81]; 6];
    let exact = fanova::fanova_test(
        &[
            fanova::CurveGroup::new("a", flat.clone()).unwrap(),
            fanova::CurveGroup::new("b", flat).unwrap(),
        ],
        200,
        0,
    )
    .unwrap();
    let ok_exact = exact.statistic == 0.0 && exact.p_value == 1.0;

    // Null calibration: both groups drawn from one distribution.
    let reps = 200;
    let rejections: usize = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = seed::rng_for(1010, rep as u64);
            let mut draw_group = |n: usize, len: usize| -> Vec<Vec<f64>> {
                (0..n)
                    .map(|_| (0..len).map(|_| 0.8 + 0.05 * rng.gen_range(-1.0..1.0)).collect())
                    .collect()
            };
            let g1 = fanova::CurveGroup::new("a", draw_group(10, 13)).unwrap();
            let g2 = fanova::CurveGroup::new("b", draw_group(10, 13)).unwrap();
            let r = fanova::fanova_test(&[g1, g2], 400, rep as u64).unwrap();
            usize::from(r.reject_null)
        })
        .sum();
    let rate = rejections as f64 / reps as f64;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = ok_exact && rate >= 0.02 && rate <= 0.08 && elapsed < 30.0;
    verdict(
        "10 (fANOVA calibration)",
        ok,
        &format!(
            "identical groups: stat={} p={}; null rejection rate {:.1}% over {reps} reps in {elapsed:.1}s",
            exact.statistic,
            exact.p_value,
            rate * 100.0
        ),
    );
}

// ---------------------------------------------------------------------------
// 11. Reproducibility of experiment reruns
// ---------------------------------------------------------------------------

#[test]
fn acceptance_11_experiment_reruns_are_byte_identical() {
    let bin = std::path::PathBuf::from(env!("CARGO_BIN_EXE_periocular"));
    let run = |args: &[&str]| {
        let out = std::process::Command::new(&bin).args(args).output().expect("binary runs");
        assert!(
            out.status.success(),
            "{:?} failed: {}",
            args,
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    run(&["synth", "--out", data.to_str().unwrap(), "--subjects", "12", "--images-per-subject", "2", "--seed", "6"]);
    let out_dir = tmp.path().join("run");
    let cfg_path = tmp.path().join("exp.toml");
    std::fs::write(
        &cfg_path,
        format!(
            "manifest = \"{}\"\ncondition = \"non_occluded\"\nexperiment = \"ulbp3\"\n\
             learner = \"adaboost_m1\"\nn_learners = 10\ntrain_fraction = 0.6\nfolds = 3\n\
             seed = 13\nout = \"{}\"\n",
            data.join("manifest.csv").display(),
            out_dir.display()
        ),
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();
    run(&["prepare", "--config", cfg]);
    run(&["experiment", "--config", cfg]);
    let archive = out_dir.join("experiment_ulbp3_adaboost_m1.json");
    let table = out_dir.join("experiment_ulbp3_adaboost_m1.csv");
    let first = (std::fs::read(&archive).unwrap(), std::fs::read(&table).unwrap());
    run(&["prepare", "--config", cfg]);
    run(&["experiment", "--config", cfg]);
    let second = (std::fs::read(&archive).unwrap(), std::fs::read(&table).unwrap());
    let ok = first == second;
    verdict(
        "11 (rerun reproducibility)",
        ok,
        "prepare+experiment rerun reproduced report archive and table byte-for-byte",
    );
}
