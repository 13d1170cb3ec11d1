//! Metrics (CCR, TPR, TNR, MCC), cross-validation execution over a split
//! plan, and CSV results tables.
//!
//! Positive class is female throughout: TPR is the female rate TP/(TP+FN),
//! TNR the male rate TN/(TN+FP).

use crate::dataset::SplitPlan;
use crate::error::{Error, Result};
use crate::learn::{LabeledSet, Trainer};
use crate::seed;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fneg: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fneg: u64) -> Self {
        Self { tp, fp, tn, fneg }
    }

    pub fn from_labels(truth: &[i8], predicted: &[i8]) -> Self {
        let mut c = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (*t > 0, *p > 0) {
                (true, true) => c.tp += 1,
                (true, false) => c.fneg += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fp += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fneg
    }

    pub fn metrics(&self) -> Result<Metrics> {
        if self.total() == 0 {
            return Err(Error::Argument("metrics need at least one prediction".into()));
        }
        let (tp, fp, tn, fneg) =
            (self.tp as f64, self.fp as f64, self.tn as f64, self.fneg as f64);
        let total = tp + fp + tn + fneg;
        let ccr = (tp + tn) / total;
        let tpr = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
        let tnr = if tn + fp > 0.0 { tn / (tn + fp) } else { 0.0 };
        // Zero-denominator convention: MCC = 0 when any factor vanishes.
        let denom = (tp + fp) * (tp + fneg) * (tn + fp) * (tn + fneg);
        let mcc = if denom > 0.0 { (tp * tn - fp * fneg) / denom.sqrt() } else { 0.0 };
        Ok(Metrics { ccr, tpr, tnr, mcc })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub ccr: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub mcc: f64,
}

/// Outcome of a single fold or of the held-out evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FoldResult {
    Evaluated { counts: ConfusionCounts, metrics: Metrics },
    Skipped { reason: String },
}

impl FoldResult {
    pub fn metrics(&self) -> Option<&Metrics> {
        match self {
            FoldResult::Evaluated { metrics, .. } => Some(metrics),
            FoldResult::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    /// Mean and sample stdev of the evaluated folds' CCR.
    pub fold_ccr_mean: Option<f64>,
    pub fold_ccr_stdev: Option<f64>,
    /// Final model trained on every train subject, scored once on the
    /// held-out test subjects.
    pub held_out: FoldResult,
}

fn rows_for<'a>(
    data: &LabeledSet,
    member: impl Fn(&str) -> bool + 'a,
) -> Vec<usize> {
    (0..data.len()).filter(|&i| member(&data.subject_ids[i])).collect()
}

fn subset(data: &LabeledSet, rows: &[usize]) -> Result<LabeledSet> {
    LabeledSet::new(
        rows.iter().map(|&i| data.features[i].clone()).collect(),
        rows.iter().map(|&i| data.labels[i]).collect(),
        rows.iter().map(|&i| data.subject_ids[i].clone()).collect(),
        data.spec.clone(),
    )
}

fn evaluate_rows(
    model: &dyn crate::learn::Classifier,
    data: &LabeledSet,
    rows: &[usize],
) -> Result<FoldResult> {
    let truth: Vec<i8> = rows.iter().map(|&i| data.labels[i]).collect();
    let predicted: Vec<i8> = rows.iter().map(|&i| model.label_row(&data.features[i])).collect();
    let counts = ConfusionCounts::from_labels(&truth, &predicted);
    Ok(FoldResult::Evaluated { counts, metrics: counts.metrics()? })
}

fn train_and_eval(
    data: &LabeledSet,
    train_rows: &[usize],
    eval_rows: &[usize],
    trainer: &dyn Trainer,
    seed_value: u64,
    what: &str,
) -> FoldResult {
    if eval_rows.is_empty() {
        return FoldResult::Skipped { reason: format!("{what}: empty evaluation side") };
    }
    let classes: std::collections::BTreeSet<i8> =
        train_rows.iter().map(|&i| data.labels[i]).collect();
    if train_rows.len() < 2 || classes.len() < 2 {
        return FoldResult::Skipped { reason: format!("{what}: training side lacks both classes") };
    }
    let train_set = match subset(data, train_rows) {
        Ok(s) => s,
        Err(e) => return FoldResult::Skipped { reason: format!("{what}: {e}") },
    };
    match trainer.train_set(&train_set, seed_value) {
        Ok(model) => match evaluate_rows(model.as_ref(), data, eval_rows) {
            Ok(r) => r,
            Err(e) => FoldResult::Skipped { reason: format!("{what}: {e}") },
        },
        Err(e) => FoldResult::Skipped { reason: format!("{what}: {e}") },
    }
}

/// Run the plan's folds and the final held-out evaluation.
///
/// Every row's subject must appear in the plan; no subject's rows may land on
/// both sides of any fold (audited here, independent of the plan builder).
/// Single-class folds are skipped and flagged rather than failing the run.
pub fn cross_validate(
    data: &LabeledSet,
    plan: &SplitPlan,
    trainer: &dyn Trainer,
    seed_value: u64,
) -> Result<EvalReport> {
    for s in &data.subject_ids {
        if !plan.train_subjects.contains(s) && !plan.test_subjects.contains(s) {
            return Err(Error::Usage(format!("subject {s:?} is not covered by the split plan")));
        }
    }
    if let Some(s) = plan.train_subjects.intersection(&plan.test_subjects).next() {
        return Err(Error::Usage(format!("subject {s:?} appears in both train and test")));
    }

    let mut folds = Vec::with_capacity(plan.folds.len());
    for (i, fold) in plan.folds.iter().enumerate() {
        if let Some(s) = fold.train.intersection(&fold.validation).next() {
            return Err(Error::Usage(format!("subject {s:?} on both sides of fold {i}")));
        }
        let train_rows = rows_for(data, |s| fold.train.contains(s));
        let val_rows = rows_for(data, |s| fold.validation.contains(s));
        folds.push(train_and_eval(
            data,
            &train_rows,
            &val_rows,
            trainer,
            seed::derive(seed_value, i as u64),
            &format!("fold {i}"),
        ));
    }

    let ccrs: Vec<f64> = folds.iter().filter_map(|f| f.metrics().map(|m| m.ccr)).collect();
    let (mean, stdev) = if ccrs.is_empty() {
        (None, None)
    } else {
        let mean = ccrs.iter().sum::<f64>() / ccrs.len() as f64;
        let stdev = if ccrs.len() < 2 {
            0.0
        } else {
            (ccrs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (ccrs.len() - 1) as f64).sqrt()
        };
        (Some(mean), Some(stdev))
    };

    let train_rows = rows_for(data, |s| plan.train_subjects.contains(s));
    let test_rows = rows_for(data, |s| plan.test_subjects.contains(s));
    let held_out = train_and_eval(
        data,
        &train_rows,
        &test_rows,
        trainer,
        seed::derive(seed_value, u64::MAX),
        "held-out",
    );

    Ok(EvalReport { folds, fold_ccr_mean: mean, fold_ccr_stdev: stdev, held_out })
}

/// Render keyed metrics as a CSV table, rows in input order. CCR/TPR/TNR are
/// percentages with fixed two decimals, MCC keeps four.
pub fn emit_table(reports: &[(String, Metrics)]) -> String {
    let mut out = String::from("method,ccr,tpr,tnr,mcc\n");
    for (key, m) in reports {
        out.push_str(&format!(
            "{key},{:.2},{:.2},{:.2},{:.4}\n",
            m.ccr * 100.0,
            m.tpr * 100.0,
            m.tnr * 100.0,
            m.mcc
        ));
    }
    out
}
