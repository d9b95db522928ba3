//! Ground-truth scoring: confusion matrices, row-normalized percentages,
//! and support-weighted accuracy/precision/recall/F1.
//!
//! Weighted metrics average the per-class one-vs-rest values with weights
//! proportional to true-class support, which makes weighted recall equal
//! accuracy by construction. Percentages are kept at full precision and
//! rounded to two decimals at render time only.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::model::{AnomalyClass, AnomalyPrediction, ClassProfile};
use crate::scalar::Scalar;

/// The slice of a prediction that evaluation needs. Deserializes from a full
/// run report's prediction objects (extra fields are ignored).
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PredictionRecord {
    pub window_index: u64,
    pub label: AnomalyClass,
}

/// Parsed predictions file: either a full run report or a bare
/// `{"predictions": [...]}` object.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EvalInput {
    #[serde(default)]
    pub source_id: Option<String>,
    pub predictions: Vec<PredictionRecord>,
    #[serde(default)]
    pub gaps: Vec<serde_json::Value>,
}

impl EvalInput {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let err = |reason: String| EvalError::BadPredictions {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

/// Window-level truth labels, keyed by (video_id, window_index). An empty
/// video id acts as a wildcard matching any source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    entries: BTreeMap<(String, u64), AnomalyClass>,
}

impl GroundTruthSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, video_id: impl Into<String>, window_index: u64, label: AnomalyClass) {
        self.entries.insert((video_id.into(), window_index), label);
    }

    pub fn label_for(&self, video_id: Option<&str>, window_index: u64) -> Option<AnomalyClass> {
        if let Some(vid) = video_id {
            if let Some(&label) = self.entries.get(&(vid.to_string(), window_index)) {
                return Some(label);
            }
        }
        self.entries
            .get(&(String::new(), window_index))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = AnomalyClass> + '_ {
        self.entries.values().copied()
    }

    /// Load from CSV with columns `video_id,window_index,label`.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let err = |line: usize, reason: String| EvalError::BadGroundTruth {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| err(0, e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(0, e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(vid_col), Some(win_col), Some(label_col)) =
            (col("video_id"), col("window_index"), col("label"))
        else {
            return Err(err(
                1,
                "header must contain video_id, window_index, label".to_string(),
            ));
        };
        let mut set = Self::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| err(line, e.to_string()))?;
            let vid = record.get(vid_col).unwrap_or("").to_string();
            let window: u64 = record
                .get(win_col)
                .unwrap_or("")
                .parse()
                .map_err(|e| err(line, format!("window_index: {e}")))?;
            let label: AnomalyClass = record
                .get(label_col)
                .unwrap_or("")
                .parse()
                .map_err(|e| err(line, format!("{e}")))?;
            set.insert(vid, window, label);
        }
        Ok(set)
    }

    /// Write CSV with columns `video_id,window_index,label`.
    pub fn to_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let mut out = String::from("video_id,window_index,label\n");
        for ((vid, window), label) in &self.entries {
            let _ = writeln!(out, "{vid},{window},{}", label.wire_name());
        }
        std::fs::write(path, out)
    }
}

/// Scoring output in the shape of a per-run results table: headline metrics
/// plus a row-normalized confusion matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "")]
pub struct EvalReport<S: Scalar> {
    pub profile: ClassProfile,
    pub classes: Vec<AnomalyClass>,
    /// Rows = truth, columns = predicted.
    pub confusion_counts: Vec<Vec<u64>>,
    /// Each nonzero-support row sums to 100.
    pub confusion_row_pct: Vec<Vec<S>>,
    /// Headline metrics, as percentages in [0, 100].
    pub accuracy: S,
    pub weighted_precision: S,
    pub weighted_recall: S,
    pub weighted_f1: S,
    pub total_windows: u64,
    /// Windows excluded from scoring (skipped by the run).
    pub excluded_windows: u64,
}

impl<S: Scalar> EvalReport<S> {
    pub fn with_excluded(mut self, excluded: u64) -> Self {
        self.excluded_windows = excluded;
        self
    }

    /// The table layout: headline metrics row, then the row-normalized
    /// confusion matrix for the active class profile.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:<10} {:<10} {:<10}", "Accuracy", "Precision", "Recall", "F1-Score");
        let _ = writeln!(
            out,
            "{:<10} {:<10} {:<10} {:<10}",
            format!("{:.2}%", self.accuracy.to_f64_lossy()),
            format!("{:.2}%", self.weighted_precision.to_f64_lossy()),
            format!("{:.2}%", self.weighted_recall.to_f64_lossy()),
            format!("{:.2}%", self.weighted_f1.to_f64_lossy()),
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "Confusion matrix (in percent)");
        let _ = write!(out, "{:<16}", "Truth\\Predicted");
        for class in &self.classes {
            let _ = write!(out, " {:>8}", class.name());
        }
        let _ = writeln!(out);
        for (i, class) in self.classes.iter().enumerate() {
            let _ = write!(out, "{:<16}", class.name());
            for j in 0..self.classes.len() {
                let _ = write!(out, " {:>8.2}", self.confusion_row_pct[i][j].to_f64_lossy());
            }
            let _ = writeln!(out);
        }
        out
    }

    /// CSV form: metric block, blank line, matrix block.
    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy,precision,recall,f1");
        let _ = writeln!(
            out,
            "{:.2},{:.2},{:.2},{:.2}",
            self.accuracy.to_f64_lossy(),
            self.weighted_precision.to_f64_lossy(),
            self.weighted_recall.to_f64_lossy(),
            self.weighted_f1.to_f64_lossy(),
        );
        let _ = writeln!(out);
        let _ = write!(out, "truth/predicted");
        for class in &self.classes {
            let _ = write!(out, ",{}", class.name());
        }
        let _ = writeln!(out);
        for (i, class) in self.classes.iter().enumerate() {
            let _ = write!(out, "{}", class.name());
            for j in 0..self.classes.len() {
                let _ = write!(out, ",{:.2}", self.confusion_row_pct[i][j].to_f64_lossy());
            }
            let _ = writeln!(out);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Score (truth, predicted) label pairs against a class profile.
pub fn score_pairs<S: Scalar>(
    pairs: &[(AnomalyClass, AnomalyClass)],
    profile: ClassProfile,
) -> Result<EvalReport<S>, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let classes = profile.classes();
    let class_index = |c: AnomalyClass| classes.iter().position(|&x| x == c);
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (i, &(truth, predicted)) in pairs.iter().enumerate() {
        let (Some(ti), Some(pi)) = (class_index(truth), class_index(predicted)) else {
            let label = if class_index(truth).is_none() {
                truth
            } else {
                predicted
            };
            return Err(EvalError::ProfileViolation {
                label: label.wire_name().to_string(),
                profile: k,
                rows: vec![i as u64],
            });
        };
        counts[ti][pi] += 1;
    }

    let total = pairs.len() as f64;
    let as_s = |v: f64| S::from_f64_lossy(v);
    let diag_sum: u64 = (0..k).map(|i| counts[i][i]).sum();
    let accuracy = diag_sum as f64 / total;

    let mut weighted_precision = 0.0f64;
    let mut weighted_recall = 0.0f64;
    let mut weighted_f1 = 0.0f64;
    for (c, row) in counts.iter().enumerate() {
        let support: u64 = row.iter().sum();
        let col_sum: u64 = counts.iter().map(|r| r[c]).sum();
        let diag = row[c] as f64;
        let precision = if col_sum == 0 { 0.0 } else { diag / col_sum as f64 };
        let recall = if support == 0 { 0.0 } else { diag / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let weight = support as f64;
        weighted_precision += weight * precision;
        weighted_recall += weight * recall;
        weighted_f1 += weight * f1;
    }
    weighted_precision /= total;
    weighted_recall /= total;
    weighted_f1 /= total;

    let confusion_row_pct = counts
        .iter()
        .map(|row| {
            let row_sum: u64 = row.iter().sum();
            row.iter()
                .map(|&v| {
                    if row_sum == 0 {
                        S::zero()
                    } else {
                        as_s(v as f64 / row_sum as f64 * 100.0)
                    }
                })
                .collect()
        })
        .collect();

    Ok(EvalReport {
        profile,
        classes: classes.to_vec(),
        confusion_counts: counts,
        confusion_row_pct,
        accuracy: as_s(accuracy * 100.0),
        weighted_precision: as_s(weighted_precision * 100.0),
        weighted_recall: as_s(weighted_recall * 100.0),
        weighted_f1: as_s(weighted_f1 * 100.0),
        total_windows: pairs.len() as u64,
        excluded_windows: 0,
    })
}

/// Score (window_index, predicted label) records against ground truth.
/// Every record must have a truth label; offenders are listed in the error.
pub fn score_records<S: Scalar>(
    records: &[(u64, AnomalyClass)],
    truth: &GroundTruthSet,
    video_id: Option<&str>,
    profile: ClassProfile,
) -> Result<EvalReport<S>, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    let mut missing = Vec::new();
    let mut violations = Vec::new();
    let mut pairs = Vec::with_capacity(records.len());
    for &(window, predicted) in records {
        match truth.label_for(video_id, window) {
            None => missing.push(window),
            Some(t) => {
                if !profile.contains(t) || !profile.contains(predicted) {
                    violations.push((window, if profile.contains(t) { predicted } else { t }));
                }
                pairs.push((t, predicted));
            }
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::MissingLabel(missing));
    }
    if let Some(&(_, label)) = violations.first() {
        return Err(EvalError::ProfileViolation {
            label: label.wire_name().to_string(),
            profile: profile.len(),
            rows: violations.iter().map(|&(w, _)| w).collect(),
        });
    }
    score_pairs(&pairs, profile)
}

/// Score a run's predictions against ground truth.
pub fn score<S: Scalar>(
    predictions: &[AnomalyPrediction<S>],
    truth: &GroundTruthSet,
    video_id: Option<&str>,
    profile: ClassProfile,
) -> Result<EvalReport<S>, EvalError> {
    let records: Vec<(u64, AnomalyClass)> = predictions
        .iter()
        .map(|p| (p.window_index, p.label))
        .collect();
    score_records(&records, truth, video_id, profile)
}
