//! Bootstrap functional ANOVA over classification-rate curves.
//!
//! Each condition contributes a group of equal-length curves (CCR per
//! feature-method index, one curve per cross-validation repetition). The
//! test statistic is the group-size-weighted sum of pairwise squared L2
//! distances between group mean curves,
//!   V = sum_{i<j} n_i * ||mean_i - mean_j||^2,
//! and its null distribution comes from resampling the within-group centered
//! curves with replacement. The null hypothesis of equal mean curves is
//! rejected at p <= 0.05.

use crate::error::{Error, Result};
use crate::seed;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const ALPHA: f64 = 0.05;

/// Curves for one condition; all curves share one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGroup {
    pub label: String,
    pub curves: Vec<Vec<f64>>,
}

impl CurveGroup {
    pub fn new(label: impl Into<String>, curves: Vec<Vec<f64>>) -> Result<Self> {
        let group = Self { label: label.into(), curves };
        if group.curves.len() < 2 {
            return Err(Error::Argument(format!(
                "group {:?} needs >= 2 curves, got {}",
                group.label,
                group.curves.len()
            )));
        }
        let len = group.curves[0].len();
        if len == 0 || group.curves.iter().any(|c| c.len() != len) {
            return Err(Error::Argument(format!(
                "group {:?} has curves of unequal or zero length",
                group.label
            )));
        }
        Ok(group)
    }

    fn mean_curve(&self) -> Vec<f64> {
        let len = self.curves[0].len();
        let mut mean = vec![0.0; len];
        for curve in &self.curves {
            for (m, v) in mean.iter_mut().zip(curve) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= self.curves.len() as f64;
        }
        mean
    }
}

/// Euclidean norm, the discretized L2 functional norm.
pub fn curve_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn statistic_of_means(means: &[Vec<f64>], sizes: &[usize]) -> f64 {
    let mut v = 0.0;
    for i in 0..means.len() {
        for j in i + 1..means.len() {
            let diff: Vec<f64> =
                means[i].iter().zip(&means[j]).map(|(a, b)| a - b).collect();
            let d = curve_norm(&diff);
            v += sizes[i] as f64 * d * d;
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanovaResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_boot: usize,
    pub seed: u64,
    /// True iff p <= 0.05.
    pub reject_null: bool,
}

/// Bootstrap test of equal group mean curves.
pub fn fanova_test(groups: &[CurveGroup], n_boot: usize, seed_value: u64) -> Result<FanovaResult> {
    if groups.len() < 2 {
        return Err(Error::Argument("need at least 2 curve groups".into()));
    }
    if n_boot < 100 {
        return Err(Error::Argument(format!("n_boot must be >= 100, got {n_boot}")));
    }
    let len = groups[0].curves[0].len();
    for g in groups {
        if g.curves.is_empty() || g.curves[0].len() != len {
            return Err(Error::Argument(format!(
                "group {:?} has curve length {} but expected {len}",
                g.label,
                g.curves.first().map(|c| c.len()).unwrap_or(0)
            )));
        }
        if g.curves.len() < 2 {
            return Err(Error::Argument(format!("group {:?} needs >= 2 curves", g.label)));
        }
    }

    let sizes: Vec<usize> = groups.iter().map(|g| g.curves.len()).collect();
    let means: Vec<Vec<f64>> = groups.iter().map(|g| g.mean_curve()).collect();
    let observed = statistic_of_means(&means, &sizes);

    // Within-group centered residuals carry the null (equal means) by
    // construction.
    let residuals: Vec<Vec<Vec<f64>>> = groups
        .iter()
        .zip(&means)
        .map(|(g, mean)| {
            g.curves
                .iter()
                .map(|c| c.iter().zip(mean).map(|(v, m)| v - m).collect())
                .collect()
        })
        .collect();

    let mut exceed = 0usize;
    for b in 0..n_boot {
        let mut rng = seed::rng_for(seed_value, b as u64);
        let boot_means: Vec<Vec<f64>> = residuals
            .iter()
            .map(|group| {
                let n = group.len();
                let mut mean = vec![0.0; len];
                for _ in 0..n {
                    let pick = &group[rng.gen_range(0..n)];
                    for (m, v) in mean.iter_mut().zip(pick) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                mean
            })
            .collect();
        if statistic_of_means(&boot_means, &sizes) >= observed {
            exceed += 1;
        }
    }
    // Add-one estimator keeps p strictly positive under finite resampling.
    let p_value = (1 + exceed) as f64 / (n_boot + 1) as f64;
    Ok(FanovaResult {
        statistic: observed,
        p_value,
        n_boot,
        seed: seed_value,
        reject_null: p_value <= ALPHA,
    })
}

/// Parse a curves CSV: header `group,<any names...>`, one row per curve with
/// the group label first; `#` comment lines are skipped. Groups keep first
/// appearance order.
pub fn parse_curves_csv(text: &str) -> Result<Vec<CurveGroup>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Manifest { row: 0, msg: "empty curves CSV".into() })?;
    let first_col = header.split(',').next().unwrap_or("").trim().to_ascii_lowercase();
    if first_col != "group" {
        return Err(Error::Manifest {
            row: 0,
            msg: format!("first column must be 'group', got {first_col:?}"),
        });
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_label: std::collections::BTreeMap<String, Vec<Vec<f64>>> = Default::default();
    let mut expected_len: Option<usize> = None;
    for (line_no, line) in lines {
        let row = line_no + 1; // 1-based line numbers for humans
        let mut fields = line.split(',');
        let label = fields.next().unwrap_or("").trim().to_string();
        if label.is_empty() {
            return Err(Error::Manifest { row, msg: "missing group label".into() });
        }
        let mut curve = Vec::new();
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Manifest {
                row,
                msg: format!("bad curve value {f:?}"),
            })?;
            curve.push(v);
        }
        if curve.is_empty() {
            return Err(Error::Manifest { row, msg: "curve row has no values".into() });
        }
        match expected_len {
            None => expected_len = Some(curve.len()),
            Some(l) if l != curve.len() => {
                return Err(Error::Manifest {
                    row,
                    msg: format!("curve has {} values, expected {l}", curve.len()),
                })
            }
            _ => {}
        }
        if !by_label.contains_key(&label) {
            order.push(label.clone());
        }
        by_label.entry(label).or_default().push(curve);
    }
    order
        .into_iter()
        .map(|label| {
            let curves = by_label.remove(&label).unwrap();
            CurveGroup::new(label, curves)
        })
        .collect()
}
