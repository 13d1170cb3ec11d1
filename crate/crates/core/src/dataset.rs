//! Manifest ingestion and person-disjoint split planning.
//!
//! Splits operate on subjects, never on images: all images of a subject
//! travel together, so no subject can appear on both sides of the train/test
//! partition or of any cross-validation fold.

use crate::error::{Error, Result};
use crate::image::OcclusionCircle;
use crate::seed;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    /// Class encoding used everywhere: male = -1, female = +1.
    pub fn label(self) -> i8 {
        match self {
            Gender::Female => 1,
            Gender::Male => -1,
        }
    }

    fn parse(token: &str) -> Option<Gender> {
        match token.trim().to_ascii_lowercase().as_str() {
            "f" | "female" => Some(Gender::Female),
            "m" | "male" => Some(Gender::Male),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Eye {
    Left,
    Right,
}

impl Eye {
    fn parse(token: &str) -> Option<Eye> {
        match token.trim().to_ascii_lowercase().as_str() {
            "l" | "left" => Some(Eye::Left),
            "r" | "right" => Some(Eye::Right),
            _ => None,
        }
    }
}

/// One labeled image reference from the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub image_path: String,
    pub subject_id: String,
    pub gender: Gender,
    pub eye: Eye,
    pub session: Option<String>,
    pub occlusion: Option<OcclusionCircle>,
}

const MANIFEST_HEADER: [&str; 8] =
    ["path", "subject_id", "gender", "eye", "session", "cx", "cy", "r"];

fn row_err(row: usize, msg: impl Into<String>) -> Error {
    Error::Manifest { row, msg: msg.into() }
}

/// Parse a manifest CSV (UTF-8, LF or CRLF). Column order is fixed:
/// `path,subject_id,gender,eye,session,cx,cy,r`; session and the occlusion
/// triple may be empty. Row numbers in errors are 1-based data rows.
pub fn load_manifest<R: Read>(reader: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| row_err(0, format!("unreadable header: {e}")))?;
        let got: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
        if got != MANIFEST_HEADER {
            return Err(row_err(0, format!("expected header {:?}, got {:?}", MANIFEST_HEADER.join(","), got.join(","))));
        }
    }
    let mut records = Vec::new();
    let mut seen_paths: BTreeSet<String> = BTreeSet::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| row_err(row, e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or("").trim().to_string();

        let path = field(0);
        if path.is_empty() {
            return Err(row_err(row, "missing path"));
        }
        if !seen_paths.insert(path.clone()) {
            return Err(row_err(row, format!("duplicate path {path:?}")));
        }
        let subject_id = field(1);
        if subject_id.is_empty() {
            return Err(row_err(row, "missing subject_id"));
        }
        let gender = Gender::parse(&field(2))
            .ok_or_else(|| row_err(row, format!("unknown gender token {:?}", field(2))))?;
        let eye = Eye::parse(&field(3))
            .ok_or_else(|| row_err(row, format!("unknown eye token {:?}", field(3))))?;
        let session = Some(field(4)).filter(|s| !s.is_empty());

        let circle_fields = [field(5), field(6), field(7)];
        let occlusion = if circle_fields.iter().all(|s| s.is_empty()) {
            None
        } else if circle_fields.iter().any(|s| s.is_empty()) {
            return Err(row_err(row, "occlusion circle needs all of cx, cy, r (or none)"));
        } else {
            let mut vals = [0.0f64; 3];
            for (v, s) in vals.iter_mut().zip(&circle_fields) {
                *v = s
                    .parse()
                    .map_err(|_| row_err(row, format!("bad occlusion value {s:?}")))?;
            }
            Some(
                OcclusionCircle::new(vals[0], vals[1], vals[2])
                    .map_err(|e| row_err(row, e.to_string()))?,
            )
        };

        records.push(SampleRecord { image_path: path, subject_id, gender, eye, session, occlusion });
    }
    Ok(records)
}

/// Write records back out in the manifest schema.
pub fn write_manifest<W: std::io::Write>(records: &[SampleRecord], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(MANIFEST_HEADER).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for r in records {
        let gender = match r.gender {
            Gender::Female => "female",
            Gender::Male => "male",
        };
        let eye = match r.eye {
            Eye::Left => "left",
            Eye::Right => "right",
        };
        let (cx, cy, rad) = match &r.occlusion {
            Some(c) => (c.cx.to_string(), c.cy.to_string(), c.r.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        wtr.write_record([
            r.image_path.as_str(),
            r.subject_id.as_str(),
            gender,
            eye,
            r.session.as_deref().unwrap_or(""),
            &cx,
            &cy,
            &rad,
        ])
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wtr.flush()?;
    Ok(())
}

/// One cross-validation fold over train subjects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: BTreeSet<String>,
    pub validation: BTreeSet<String>,
}

/// Person-disjoint train/test partition plus a k-fold plan over the train
/// subjects. Immutable once built; serializes to versioned JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub version: u32,
    pub seed: u64,
    pub train_subjects: BTreeSet<String>,
    pub test_subjects: BTreeSet<String>,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<SplitPlan> {
        let plan: SplitPlan = serde_json::from_str(text)?;
        if plan.version != 1 {
            return Err(Error::Usage(format!("unsupported split plan version {}", plan.version)));
        }
        Ok(plan)
    }

    pub fn is_train_subject(&self, subject: &str) -> bool {
        self.train_subjects.contains(subject)
    }
}

/// Build a gender-balanced, person-disjoint split.
///
/// Per gender, `round_ties_even(train_fraction * n)` subjects go to train
/// after a seed-deterministic shuffle of the sorted subject list; the k folds
/// then partition each gender's train subjects as evenly as possible.
pub fn make_split(
    records: &[SampleRecord],
    train_fraction: f64,
    k: usize,
    seed_value: u64,
) -> Result<SplitPlan> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!("train_fraction must be in (0,1), got {train_fraction}")));
    }
    if k == 0 {
        return Err(Error::Argument("fold count must be >= 1".into()));
    }
    let mut subject_gender: BTreeMap<&str, Gender> = BTreeMap::new();
    for r in records {
        match subject_gender.entry(r.subject_id.as_str()) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(r.gender);
            }
            std::collections::btree_map::Entry::Occupied(e) => {
                if *e.get() != r.gender {
                    return Err(Error::Argument(format!(
                        "subject {:?} appears with conflicting genders",
                        r.subject_id
                    )));
                }
            }
        }
    }

    let mut train_subjects = BTreeSet::new();
    let mut test_subjects = BTreeSet::new();
    // Per-gender fold buckets; merged across genders below.
    let mut fold_validation: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];

    for (gender_idx, gender) in [Gender::Female, Gender::Male].into_iter().enumerate() {
        // Sorted-then-shuffled so the outcome is independent of record order.
        let mut subjects: Vec<&str> = subject_gender
            .iter()
            .filter(|(_, g)| **g == gender)
            .map(|(s, _)| *s)
            .collect();
        let n = subjects.len();
        if n < k {
            return Err(Error::Argument(format!(
                "too few {gender:?} subjects for {k} folds: have {n}"
            )));
        }
        let n_train = (train_fraction * n as f64).round_ties_even() as usize;
        let n_train = n_train.clamp(1, n);
        subjects.shuffle(&mut seed::rng_for(seed_value, gender_idx as u64));
        for (i, s) in subjects.iter().enumerate() {
            if i < n_train {
                train_subjects.insert(s.to_string());
                fold_validation[i % k].insert(s.to_string());
            } else {
                test_subjects.insert(s.to_string());
            }
        }
    }

    let folds = fold_validation
        .into_iter()
        .map(|validation| {
            let train = train_subjects.difference(&validation).cloned().collect();
            Fold { train, validation }
        })
        .collect();

    Ok(SplitPlan { version: 1, seed: seed_value, train_subjects, test_subjects, folds })
}
