//! Soft-margin Gaussian-kernel SVM trained with sequential minimal
//! optimization (Platt-style working-set selection, full error cache).
//!
//! The dual being maximized is
//!   W(a) = sum a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! subject to 0 <= a_i <= C and sum a_i y_i = 0, with
//! K(x, z) = exp(-gamma * ||x - z||^2). Training stops when no point
//! violates its KKT condition by more than `tol`.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    pub tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 10.0, gamma: 1.0, tol: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub bias: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub coefficients: Vec<f64>,
    pub dual_objective: f64,
}

impl SvmModel {
    /// Signed margin; positive means the female (+1) class.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut sum = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.coefficients) {
            sum += coef * gaussian_kernel(sv, x, self.gamma);
        }
        sum
    }
}

pub fn gaussian_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        let d = ai - bi;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Hard cap on outer optimization passes; generously above what any
/// desk-scale problem needs, present only to guarantee termination.
const MAX_PASSES: usize = 100_000;

const ALPHA_EPS: f64 = 1e-12;

struct Smo<'a> {
    y: &'a [i8],
    c: f64,
    tol: f64,
    kernel: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    errors: Vec<f64>,
    bias: f64,
    rng: rand_chacha::ChaCha8Rng,
}

impl<'a> Smo<'a> {
    fn non_bound(&self) -> Vec<usize> {
        (0..self.alpha.len())
            .filter(|&i| self.alpha[i] > ALPHA_EPS && self.alpha[i] < self.c - ALPHA_EPS)
            .collect()
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1_old, a2_old) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (f64::from(self.y[i1]), f64::from(self.y[i2]));
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2_old - a1_old).max(0.0), (self.c + a2_old - a1_old).min(self.c))
        } else {
            ((a2_old + a1_old - self.c).max(0.0), (a2_old + a1_old).min(self.c))
        };
        if hi - lo < ALPHA_EPS {
            return false;
        }
        let k11 = self.kernel[i1][i1];
        let k12 = self.kernel[i1][i2];
        let k22 = self.kernel[i2][i2];
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2 = if eta > ALPHA_EPS {
            (a2_old + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat direction: evaluate the dual delta at both box ends.
            let delta = |a2_new: f64| {
                let a1_new = a1_old + s * (a2_old - a2_new);
                let d1 = a1_new - a1_old;
                let d2 = a2_new - a2_old;
                // v_i collects the fixed contribution of all other points.
                let f1 = e1 + y1;
                let f2 = e2 + y2;
                let v1 = f1 - self.bias - a1_old * y1 * k11 - a2_old * y2 * k12;
                let v2 = f2 - self.bias - a1_old * y1 * k12 - a2_old * y2 * k22;
                d1 + d2
                    - 0.5 * k11 * (a1_new * a1_new - a1_old * a1_old)
                    - 0.5 * k22 * (a2_new * a2_new - a2_old * a2_old)
                    - s * k12 * (a1_new * a2_new - a1_old * a2_old)
                    - y1 * v1 * d1
                    - y2 * v2 * d2
            };
            let (dl, dh) = (delta(lo), delta(hi));
            if dl > dh + ALPHA_EPS {
                lo
            } else if dh > dl + ALPHA_EPS {
                hi
            } else {
                return false;
            }
        };
        if a2 < ALPHA_EPS {
            a2 = 0.0;
        } else if a2 > self.c - ALPHA_EPS {
            a2 = self.c;
        }
        if (a2 - a2_old).abs() < ALPHA_EPS * (a2 + a2_old + ALPHA_EPS) {
            return false;
        }
        let a1 = (a1_old + s * (a2_old - a2)).clamp(0.0, self.c);

        let d1 = y1 * (a1 - a1_old);
        let d2 = y2 * (a2 - a2_old);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let new_bias = if a1 > ALPHA_EPS && a1 < self.c - ALPHA_EPS {
            b1
        } else if a2 > ALPHA_EPS && a2 < self.c - ALPHA_EPS {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = new_bias - self.bias;
        for i in 0..self.errors.len() {
            self.errors[i] += d1 * self.kernel[i1][i] + d2 * self.kernel[i2][i] + db;
        }
        self.bias = new_bias;
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = f64::from(self.y[i2]);
        let a2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates = (r2 < -self.tol && a2 < self.c - ALPHA_EPS)
            || (r2 > self.tol && a2 > ALPHA_EPS);
        if !violates {
            return false;
        }
        let non_bound = self.non_bound();
        if non_bound.len() > 1 {
            // Best heuristic first: maximize |E1 - E2|.
            let i1 = *non_bound
                .iter()
                .max_by(|&&a, &&b| {
                    let da = (self.errors[a] - e2).abs();
                    let db = (self.errors[b] - e2).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            if self.take_step(i1, i2) {
                return true;
            }
        }
        if !non_bound.is_empty() {
            let start = self.rng.gen_range(0..non_bound.len());
            for k in 0..non_bound.len() {
                let i1 = non_bound[(start + k) % non_bound.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        let n = self.alpha.len();
        let start = self.rng.gen_range(0..n);
        for k in 0..n {
            let i1 = (start + k) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }
}

/// Train on +-1 labels. Returns the model with support vectors, dual
/// coefficients, bias, and final dual objective.
pub fn train(x: &[Vec<f64>], y: &[i8], params: SvmParams, seed: u64) -> Result<SvmModel> {
    train_full(x, y, params, seed).map(|(model, _)| model)
}

/// As [`train`], but also returns the final dual variables, aligned with the
/// training rows, for KKT auditing.
pub fn train_full(
    x: &[Vec<f64>],
    y: &[i8],
    params: SvmParams,
    seed: u64,
) -> Result<(SvmModel, Vec<f64>)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Training(format!("need >= 2 labeled samples, got {}", x.len())));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::Training("training data must contain both classes".into()));
    }
    if params.c <= 0.0 || params.gamma <= 0.0 {
        return Err(Error::Argument(format!(
            "C and gamma must be positive, got C={} gamma={}",
            params.c, params.gamma
        )));
    }
    if !(params.tol > 0.0 && params.tol <= 0.1) {
        return Err(Error::Argument(format!("tol must be in (0, 0.1], got {}", params.tol)));
    }
    let n = x.len();
    let mut kernel = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let k = gaussian_kernel(&x[i], &x[j], params.gamma);
            kernel[i][j] = k;
            kernel[j][i] = k;
        }
    }
    let mut smo = Smo {
        y,
        c: params.c,
        tol: params.tol,
        kernel,
        alpha: vec![0.0; n],
        errors: y.iter().map(|&yi| -f64::from(yi)).collect(),
        bias: 0.0,
        rng: crate::seed::rng(seed),
    };

    let mut examine_all = true;
    let mut passes = 0;
    loop {
        let mut num_changed = 0usize;
        if examine_all {
            for i in 0..n {
                num_changed += usize::from(smo.examine(i));
            }
        } else {
            for i in smo.non_bound() {
                num_changed += usize::from(smo.examine(i));
            }
        }
        passes += 1;
        if examine_all {
            if num_changed == 0 {
                break; // full pass with no KKT violations beyond tol
            }
            examine_all = false;
        } else if num_changed == 0 {
            examine_all = true;
        }
        if passes >= MAX_PASSES {
            break;
        }
    }

    // Recompute the bias from the final duals with the standard rule: the
    // mean over free support vectors of y_i - u_i (u = decision sum without
    // bias), falling back to the midpoint of the KKT-feasible interval when
    // every dual sits on a bound. This pins the bias convention regardless
    // of the path SMO took.
    let u = |i: usize| -> f64 {
        (0..n)
            .map(|j| smo.alpha[j] * f64::from(y[j]) * smo.kernel[j][i])
            .sum()
    };
    let free: Vec<usize> = (0..n)
        .filter(|&i| smo.alpha[i] > ALPHA_EPS && smo.alpha[i] < params.c - ALPHA_EPS)
        .collect();
    smo.bias = if !free.is_empty() {
        free.iter().map(|&i| f64::from(y[i]) - u(i)).sum::<f64>() / free.len() as f64
    } else {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for i in 0..n {
            let yi = f64::from(y[i]);
            let bound = yi - u(i);
            // alpha=0 needs y*(u+b) >= 1; alpha=C needs y*(u+b) <= 1.
            let at_zero = smo.alpha[i] <= ALPHA_EPS;
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

    // Dual objective over the final alphas.
    let mut objective: f64 = smo.alpha.iter().sum();
    for i in 0..n {
        if smo.alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if smo.alpha[j] == 0.0 {
                continue;
            }
            objective -= 0.5
                * smo.alpha[i]
                * smo.alpha[j]
                * f64::from(y[i])
                * f64::from(y[j])
                * smo.kernel[i][j];
        }
    }

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if smo.alpha[i] > ALPHA_EPS {
            support_vectors.push(x[i].clone());
            coefficients.push(smo.alpha[i] * f64::from(y[i]));
        }
    }
    let model = SvmModel {
        gamma: params.gamma,
        bias: smo.bias,
        support_vectors,
        coefficients,
        dual_objective: objective,
    };
    Ok((model, smo.alpha))
}

/// Largest KKT violation measured on the training data: zero-alpha points
/// need y*f >= 1, bound points y*f <= 1, free points y*f = 1, all within
/// tolerance.
pub fn kkt_max_violation(
    model: &SvmModel,
    alpha: &[f64],
    x: &[Vec<f64>],
    y: &[i8],
    c: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let r = f64::from(y[i]) * model.decision(&x[i]) - 1.0;
        let v = if alpha[i] <= ALPHA_EPS {
            (-r).max(0.0)
        } else if alpha[i] >= c - ALPHA_EPS {
            r.max(0.0)
        } else {
            r.abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Grid search C and gamma by mean fold accuracy; ties keep the earliest
/// combination in (C-major, gamma-minor) order.
pub fn grid_search(
    x: &[Vec<f64>],
    y: &[i8],
    folds: &[(Vec<usize>, Vec<usize>)],
    c_grid: &[f64],
    gamma_grid: &[f64],
    tol: f64,
    seed: u64,
) -> Result<SvmParams> {
    if folds.is_empty() {
        return Err(Error::Argument("grid search needs at least one fold".into()));
    }
    let mut best: Option<(f64, SvmParams)> = None;
    for &c in c_grid {
        for &gamma in gamma_grid {
            let params = SvmParams { c, gamma, tol };
            let mut acc_sum = 0.0;
            let mut fold_count = 0usize;
            for (train_idx, val_idx) in folds {
                let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| x[i].clone()).collect();
                let ty: Vec<i8> = train_idx.iter().map(|&i| y[i]).collect();
                if !ty.contains(&1) || !ty.contains(&-1) || val_idx.is_empty() {
                    continue;
                }
                let model = train(&tx, &ty, params, seed)?;
                let correct = val_idx
                    .iter()
                    .filter(|&&i| {
                        let label = if model.decision(&x[i]) > 0.0 { 1 } else { -1 };
                        label == y[i]
                    })
                    .count();
                acc_sum += correct as f64 / val_idx.len() as f64;
                fold_count += 1;
            }
            if fold_count == 0 {
                continue;
            }
            let mean = acc_sum / fold_count as f64;
            if best.as_ref().map_or(true, |(b, _)| mean > *b + 1e-12) {
                best = Some((mean, params));
            }
        }
    }
    best.map(|(_, p)| p)
        .ok_or_else(|| Error::Training("no grid-search fold had both classes".into()))
}

/// The default hyperparameter grids: C in {1, 10, 100} and gamma in
/// {1/d, 2/d, 4/d} for feature count d.
pub fn default_grids(n_features: usize) -> (Vec<f64>, Vec<f64>) {
    let d = n_features.max(1) as f64;
    (vec![1.0, 10.0, 100.0], vec![1.0 / d, 2.0 / d, 4.0 / d])
}
