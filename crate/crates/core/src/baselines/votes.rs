use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Interview, Label};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, Metrics};

/// Mean metrics of random guessing at the training hirable rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomVote {
    pub hirable_rate: f64,
    pub draws: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteReport {
    pub random: RandomVote,
    pub majority: Metrics,
    pub majority_predictions: Vec<Label>,
}

/// Majority label of each position (keyed by job title) in `train`, plus
/// the global majority used for unseen positions. Ties count as hirable.
pub fn position_majority(train: &[&Interview]) -> (BTreeMap<Vec<usize>, Label>, Label) {
    let mut counts: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
    let (mut yes, mut no) = (0, 0);
    for i in train {
        let c = counts.entry(i.job_tokens.clone()).or_default();
        if i.label.is_hirable() {
            c.0 += 1;
            yes += 1;
        } else {
            c.1 += 1;
            no += 1;
        }
    }
    let by_position = counts
        .into_iter()
        .map(|(k, (y, n))| (k, Label::from_bool(y >= n)))
        .collect();
    (by_position, Label::from_bool(yes >= no))
}

pub fn vote_baselines(train: &[&Interview], test: &[&Interview], draws: usize, seed: u64) -> Result<VoteReport> {
    if test.is_empty() {
        return Err(Error::degenerate("vote baselines need a non-empty test set"));
    }
    if train.is_empty() || draws == 0 {
        return Err(Error::degenerate("vote baselines need training labels and at least one draw"));
    }
    let labels: Vec<Label> = test.iter().map(|i| i.label).collect();
    let rate = train.iter().filter(|i| i.label.is_hirable()).count() as f64 / train.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = [0.0; 3];
    let mut f1s = Vec::with_capacity(draws);
    let mut preds = vec![Label::NotHirable; test.len()];
    for _ in 0..draws {
        for p in preds.iter_mut() {
            *p = Label::from_bool(rng.gen_bool(rate));
        }
        let m = compute_metrics(&preds, &labels)?;
        sums[0] += m.precision;
        sums[1] += m.recall;
        sums[2] += m.f1;
        f1s.push(m.f1);
    }
    let n = draws as f64;
    let mean_f1 = sums[2] / n;
    let f1_std = (f1s.iter().map(|f| (f - mean_f1) * (f - mean_f1)).sum::<f64>() / n).sqrt();

    let (by_position, global) = position_majority(train);
    let majority_predictions: Vec<Label> = test
        .iter()
        .map(|i| by_position.get(&i.job_tokens).copied().unwrap_or(global))
        .collect();
    Ok(VoteReport {
        random: RandomVote {
            hirable_rate: rate,
            draws,
            precision: sums[0] / n,
            recall: sums[1] / n,
            f1: mean_f1,
            f1_std,
        },
        majority: compute_metrics(&majority_predictions, &labels)?,
        majority_predictions,
    })
}
