use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Split, TaskDataset, CTX, MASK};
use crate::corpus::csvio::{read_csv, write_csv};
use crate::Result;

pub const PREDICTIONS_HEADER: &[&str] = &["sample_id", "prediction"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Accuracy {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl Accuracy {
    fn add(&mut self, ok: bool) {
        self.n += 1;
        self.correct += usize::from(ok);
        self.accuracy = self.correct as f64 / self.n as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub split: Split,
    pub overall: Accuracy,
    pub per_stratum: BTreeMap<String, Accuracy>,
    pub per_bucket: BTreeMap<String, Accuracy>,
    /// Samples with no prediction; scored as wrong.
    pub missing: usize,
}

/// Exact string match over one split.
pub fn evaluate_exact_match(ds: &TaskDataset, predictions: &BTreeMap<String, String>, split: Split) -> EvalReport {
    let mut report = EvalReport {
        split,
        overall: Accuracy::default(),
        per_stratum: BTreeMap::new(),
        per_bucket: BTreeMap::new(),
        missing: 0,
    };
    for s in ds.split(split) {
        let pred = predictions.get(&s.sample_id);
        if pred.is_none() {
            report.missing += 1;
        }
        let ok = pred.is_some_and(|p| *p == s.label);
        report.overall.add(ok);
        if let Some(st) = s.stratum {
            report.per_stratum.entry(st.to_string()).or_default().add(ok);
        }
        report.per_bucket.entry(s.size_bucket.to_string()).or_default().add(ok);
    }
    report
}

fn label_counts(ds: &TaskDataset) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for s in ds.split(Split::Train) {
        *counts.entry(s.label.as_str()).or_default() += 1;
    }
    counts
}

fn most_frequent(counts: &BTreeMap<&str, usize>) -> String {
    // BTreeMap order makes the smallest label win ties
    counts
        .iter()
        .fold(None, |best: Option<(&str, usize)>, (&l, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((l, c)),
        })
        .map(|(l, _)| l.to_string())
        .unwrap_or_default()
}

/// Predicts the most frequent training label for every sample.
pub fn most_frequent_name(ds: &TaskDataset) -> BTreeMap<String, String> {
    let label = most_frequent(&label_counts(ds));
    ds.samples.iter().map(|s| (s.sample_id.clone(), label.clone())).collect()
}

/// Predicts the visible payload token that was most often a training
/// label, falling back to the most frequent label.
pub fn unigram_baseline(ds: &TaskDataset) -> BTreeMap<String, String> {
    let counts = label_counts(ds);
    let fallback = most_frequent(&counts);
    ds.samples
        .iter()
        .map(|s| {
            let best = s
                .payload
                .split(' ')
                .filter(|t| *t != MASK && *t != CTX)
                .filter_map(|t| counts.get(t).map(|&c| (c, t)))
                .fold(None, |best: Option<(usize, &str)>, (c, t)| match best {
                    Some((bc, bt)) if bc > c || (bc == c && bt <= t) => best,
                    _ => Some((c, t)),
                });
            (s.sample_id.clone(), best.map_or_else(|| fallback.clone(), |(_, t)| t.to_string()))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct PredictionRow {
    sample_id: String,
    prediction: String,
}

pub fn write_predictions(path: &Path, predictions: &BTreeMap<String, String>) -> Result<()> {
    let rows: Vec<PredictionRow> = predictions
        .iter()
        .map(|(s, p)| PredictionRow {
            sample_id: s.clone(),
            prediction: p.clone(),
        })
        .collect();
    write_csv(path, &rows, PREDICTIONS_HEADER)
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let rows: Vec<PredictionRow> = read_csv(path, PREDICTIONS_HEADER)?;
    Ok(rows.into_iter().map(|r| (r.sample_id, r.prediction)).collect())
}
