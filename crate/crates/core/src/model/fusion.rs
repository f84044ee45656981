use std::path::Path;

use serde::{Deserialize, Serialize};

use super::checkpoint::{read_checkpoint, write_checkpoint};
use crate::baselines::{train_linear_classifier, LogisticModel};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::graph::sigmoid;
use crate::params::ParamStore;
use crate::tensor::Tensor;

/// Mean of the available modality scores, thresholded (`score >= threshold`
/// is hirable).
pub fn late_fusion(scores: &[Option<f64>], threshold: f64) -> Result<(f64, Label)> {
    let present: Vec<f64> = scores.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::degenerate("late fusion needs at least one modality score"));
    }
    let s = present.iter().sum::<f64>() / present.len() as f64;
    Ok((s, Label::from_bool(s >= threshold)))
}

/// Logistic classifier over concatenated per-modality representations.
/// A missing modality is replaced by its training mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyFusion {
    pub means: Vec<Vec<f64>>,
    pub classifier: LogisticModel,
    pub threshold: f64,
}

pub const FUSION_KIND: &str = "early-fusion";

impl EarlyFusion {
    /// Fits on one row per candidate holding the optional representation of
    /// every modality slot.
    pub fn fit(rows: &[Vec<Option<Vec<f64>>>], labels: &[Label], l2: f64, threshold: f64) -> Result<Self> {
        let slots = rows.first().map(Vec::len).ok_or_else(|| Error::degenerate("no candidates to fuse"))?;
        let mut means = Vec::with_capacity(slots);
        for s in 0..slots {
            let present: Vec<&Vec<f64>> = rows.iter().filter_map(|r| r[s].as_ref()).collect();
            let first = present
                .first()
                .ok_or_else(|| Error::degenerate(format!("modality slot {s} is missing for every training candidate")))?;
            let mut m = vec![0.0; first.len()];
            for v in &present {
                if v.len() != m.len() {
                    return Err(Error::contract(format!("slot {s} representations differ in width")));
                }
                for (a, b) in m.iter_mut().zip(v.iter()) {
                    *a += b / present.len() as f64;
                }
            }
            means.push(m);
        }
        let mut fusion = EarlyFusion {
            means,
            classifier: LogisticModel::zeros(0),
            threshold,
        };
        let xs = rows
            .iter()
            .map(|r| {
                let refs: Vec<Option<&[f64]>> = r.iter().map(|v| v.as_deref()).collect();
                fusion.features(&refs)
            })
            .collect::<Result<Vec<_>>>()?;
        fusion.classifier = train_linear_classifier(&xs, labels, l2)?;
        Ok(fusion)
    }

    /// Concatenation with missing slots imputed.
    pub fn features(&self, reps: &[Option<&[f64]>]) -> Result<Vec<f64>> {
        if reps.len() != self.means.len() {
            return Err(Error::contract(format!(
                "{} modality slots, expected {}",
                reps.len(),
                self.means.len()
            )));
        }
        if reps.iter().all(Option::is_none) {
            return Err(Error::degenerate("early fusion needs at least one modality"));
        }
        let mut out = Vec::new();
        for (r, mean) in reps.iter().zip(&self.means) {
            let v = r.unwrap_or(mean);
            if v.len() != mean.len() {
                return Err(Error::Shape {
                    op: "early fusion",
                    left: vec![mean.len()],
                    right: vec![v.len()],
                });
            }
            out.extend_from_slice(v);
        }
        Ok(out)
    }

    pub fn score(&self, reps: &[Option<&[f64]>]) -> Result<f64> {
        early_fusion(reps, self)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut store = ParamStore::new();
        for (s, m) in self.means.iter().enumerate() {
            store.insert(&format!("means.{s}"), Tensor::vector(m.clone())?);
        }
        store.insert("classifier.w", Tensor::vector(self.classifier.w.clone())?);
        store.insert("classifier.b", Tensor::vector(vec![self.classifier.b])?);
        write_checkpoint(path, FUSION_KIND, &self.threshold, &store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (threshold, store): (f64, ParamStore) = read_checkpoint(path, FUSION_KIND)?;
        let get = |n: &str| {
            store
                .get(n)
                .map(|t| t.data().to_vec())
                .map_err(|_| Error::Checkpoint(format!("missing parameter {n}")))
        };
        let mut means = Vec::new();
        while store.contains(&format!("means.{}", means.len())) {
            means.push(get(&format!("means.{}", means.len()))?);
        }
        let w = get("classifier.w")?;
        let b = get("classifier.b")?;
        if b.len() != 1 || w.len() != means.iter().map(Vec::len).sum::<usize>() {
            return Err(Error::Checkpoint("fusion classifier width does not match the modality means".into()));
        }
        Ok(EarlyFusion {
            means,
            classifier: LogisticModel { w, b: b[0] },
            threshold,
        })
    }
}

/// `σ(w·[v_1, …, v_m] + b)` over the imputed concatenation.
pub fn early_fusion(reps: &[Option<&[f64]>], fusion: &EarlyFusion) -> Result<f64> {
    let x = fusion.features(reps)?;
    if x.len() != fusion.classifier.w.len() {
        return Err(Error::Shape {
            op: "early fusion",
            left: vec![fusion.classifier.w.len()],
            right: vec![x.len()],
        });
    }
    Ok(sigmoid(fusion.classifier.logit(&x)))
}
