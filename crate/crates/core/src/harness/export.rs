use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{write_atomic, Interview, Label};
use crate::error::{Error, Result};
use crate::model::{HireNet, Variant};

/// Attention values of one answer step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionStep {
    pub question: usize,
    pub step: usize,
    pub alpha: f64,
    /// `α_t · l` of the answer.
    pub p_w: f64,
    /// `α_i · n` of the question.
    pub p_q: f64,
    /// `sqrt(p_q) · p_w`.
    pub combined: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionReport {
    pub candidate_id: String,
    pub variant: Variant,
    pub score: f64,
    pub label: Label,
    pub question_alphas: Vec<f64>,
    pub relative_question: Vec<f64>,
    pub steps: Vec<AttentionStep>,
}

impl AttentionReport {
    /// Question with the largest weight (lowest index among ties).
    pub fn top_question(&self) -> usize {
        argmax(&self.question_alphas)
    }

    /// Step indices of `question` ordered by decreasing `p_w`.
    pub fn ranked_steps(&self, question: usize) -> Vec<usize> {
        let mut s: Vec<&AttentionStep> = self.steps.iter().filter(|s| s.question == question).collect();
        s.sort_by(|a, b| b.p_w.total_cmp(&a.p_w).then(a.step.cmp(&b.step)));
        s.into_iter().map(|s| s.step).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Attention weights and relative attention of one interview, flattened
/// for plotting.
pub fn export_attention(model: &HireNet, interview: &Interview) -> Result<AttentionReport> {
    let variant = model.config().variant;
    if !variant.has_attention() {
        return Err(Error::UnsupportedVariant(variant.as_str().into()));
    }
    let p = model.predict(interview)?;
    let t = &p.trace;
    let mut steps = Vec::new();
    for (q, alphas) in t.frame_alphas.iter().enumerate() {
        for (s, &alpha) in alphas.iter().enumerate() {
            steps.push(AttentionStep {
                question: q,
                step: s,
                alpha,
                p_w: t.relative_word[q][s],
                p_q: t.relative_question[q],
                combined: t.combined[q][s],
            });
        }
    }
    Ok(AttentionReport {
        candidate_id: p.candidate_id,
        variant,
        score: p.score,
        label: p.label,
        question_alphas: t.question_alphas.clone(),
        relative_question: t.relative_question.clone(),
        steps,
    })
}
