use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{write_atomic, Interview, Label, Modality};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, Metrics};
use crate::model::HireNet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate_id: String,
    pub score: f64,
    pub predicted: Label,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub scores: Vec<CandidateScore>,
}

/// Scores `split` with frozen parameters.
pub fn evaluate(model: &HireNet, split: &[&Interview]) -> Result<Evaluation> {
    if split.is_empty() {
        return Err(Error::degenerate("cannot evaluate an empty split"));
    }
    let scores = split
        .iter()
        .map(|i| {
            let p = model.predict(i)?;
            Ok(CandidateScore {
                candidate_id: p.candidate_id,
                score: p.score,
                predicted: p.label,
                label: i.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted: Vec<Label> = scores.iter().map(|s| s.predicted).collect();
    let labels: Vec<Label> = scores.iter().map(|s| s.label).collect();
    Ok(Evaluation {
        metrics: compute_metrics(&predicted, &labels)?,
        scores,
    })
}

/// One line of a metrics report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub modality: String,
    pub split: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricsRow {
    pub fn new(model: &str, modality: &str, split: &str, m: &Metrics) -> Self {
        MetricsRow {
            model: model.into(),
            modality: modality.into(),
            split: split.into(),
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
        }
    }

    pub fn for_modality(model: &str, modality: Modality, split: &str, m: &Metrics) -> Self {
        Self::new(model, modality.as_str(), split, m)
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::contract(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::contract(format!("csv: {e}")))
}

/// Writes `model,modality,split,precision,recall,f1` rows.
pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

#[derive(Serialize)]
struct ScoreRow<'a> {
    candidate_id: &'a str,
    score: f64,
    predicted: u8,
    label: u8,
}

/// Writes one row per candidate: id, score, predicted and true label.
pub fn write_scores_csv(path: &Path, scores: &[CandidateScore]) -> Result<()> {
    let rows: Vec<ScoreRow> = scores
        .iter()
        .map(|s| ScoreRow {
            candidate_id: &s.candidate_id,
            score: s.score,
            predicted: u8::from(s.predicted.is_hirable()),
            label: u8::from(s.label.is_hirable()),
        })
        .collect();
    write_atomic(path, &csv_bytes(&rows)?)
}
