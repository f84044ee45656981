use serde::{Deserialize, Serialize};

use crate::data::FeatureKind;
use crate::error::{Error, Result};

/// Summary of one continuous column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// Sum of the positive first differences.
    pub sum_pos_grad: f64,
    /// Magnitude of the sum of the negative first differences.
    pub sum_neg_grad: f64,
}

/// Summary of one binary activation column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryStats {
    pub mean: f64,
    pub active_segments: usize,
    pub segment_mean_duration: f64,
    pub segment_std_duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnStats {
    Continuous(ContinuousStats),
    Binary(BinaryStats),
}

/// Per-column statistics of one answer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatVector {
    pub columns: Vec<ColumnStats>,
}

impl StatVector {
    /// Flattens the statistics into a feature vector (6 values per
    /// continuous column, 4 per binary column).
    pub fn to_features(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.columns {
            match c {
                ColumnStats::Continuous(s) => {
                    out.extend([s.mean, s.std, s.min, s.max, s.sum_pos_grad, s.sum_neg_grad])
                }
                ColumnStats::Binary(s) => out.extend([
                    s.mean,
                    s.active_segments as f64,
                    s.segment_mean_duration,
                    s.segment_std_duration,
                ]),
            }
        }
        out
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn continuous(col: &[f64]) -> ContinuousStats {
    let (mean, std) = mean_std(col.iter().copied());
    let (mut pos, mut neg) = (0.0, 0.0);
    for w in col.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            pos += d;
        } else {
            neg -= d;
        }
    }
    ContinuousStats {
        mean,
        std,
        min: col.iter().copied().fold(f64::INFINITY, f64::min),
        max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        sum_pos_grad: pos,
        sum_neg_grad: neg,
    }
}

fn binary(col: &[f64]) -> BinaryStats {
    let mut durations = Vec::new();
    let mut run = 0usize;
    for &v in col {
        if v == 1.0 {
            run += 1;
        } else if run > 0 {
            durations.push(run as f64);
            run = 0;
        }
    }
    if run > 0 {
        durations.push(run as f64);
    }
    let (segment_mean_duration, segment_std_duration) = if durations.is_empty() {
        (0.0, 0.0)
    } else {
        mean_std(durations.iter().copied())
    };
    BinaryStats {
        mean: col.iter().sum::<f64>() / col.len() as f64,
        active_segments: durations.len(),
        segment_mean_duration,
        segment_std_duration,
    }
}

/// Order-blind summary of an answer, except for the gradient sums.
pub fn aggregate_stats(answer: &[Vec<f64>], kinds: &[FeatureKind]) -> Result<StatVector> {
    if answer.is_empty() {
        return Err(Error::degenerate("cannot summarise an answer without frames"));
    }
    if let Some(row) = answer.iter().find(|r| r.len() != kinds.len()) {
        return Err(Error::Shape {
            op: "aggregate_stats",
            left: vec![kinds.len()],
            right: vec![row.len()],
        });
    }
    let columns = kinds
        .iter()
        .enumerate()
        .map(|(j, kind)| {
            let col: Vec<f64> = answer.iter().map(|r| r[j]).collect();
            match kind {
                FeatureKind::Continuous => Ok(ColumnStats::Continuous(continuous(&col))),
                FeatureKind::Binary => {
                    if let Some(v) = col.iter().find(|v| **v != 0.0 && **v != 1.0) {
                        return Err(Error::contract(format!("binary column {j} holds {v}")));
                    }
                    Ok(ColumnStats::Binary(binary(&col)))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StatVector { columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(vals: &[f64], kind: FeatureKind) -> ColumnStats {
        let rows: Vec<Vec<f64>> = vals.iter().map(|v| vec![*v]).collect();
        aggregate_stats(&rows, &[kind]).unwrap().columns[0]
    }

    #[test]
    fn constant_column() {
        let ColumnStats::Continuous(s) = column(&[5.0, 5.0, 5.0], FeatureKind::Continuous) else { panic!() };
        assert_eq!((s.mean, s.std, s.min, s.max, s.sum_pos_grad, s.sum_neg_grad), (5.0, 0.0, 5.0, 5.0, 0.0, 0.0));
    }

    #[test]
    fn hand_column() {
        let ColumnStats::Continuous(s) = column(&[1.0, 3.0, 2.0], FeatureKind::Continuous) else { panic!() };
        assert_eq!((s.mean, s.min, s.max, s.sum_pos_grad, s.sum_neg_grad), (2.0, 1.0, 3.0, 2.0, 1.0));
        assert!((s.std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn binary_segments() {
        let ColumnStats::Binary(s) = column(&[0.0, 1.0, 1.0, 0.0, 1.0], FeatureKind::Binary) else { panic!() };
        assert_eq!(s.mean, 0.6);
        assert_eq!(s.active_segments, 2);
        assert_eq!((s.segment_mean_duration, s.segment_std_duration), (1.5, 0.5));
        let rows = vec![vec![0.5]];
        assert!(matches!(aggregate_stats(&rows, &[FeatureKind::Binary]), Err(Error::Contract(_))));
    }

    #[test]
    fn gradient_sums_see_order() {
        let a = column(&[1.0, 3.0, 2.0], FeatureKind::Continuous);
        let b = column(&[1.0, 2.0, 3.0], FeatureKind::Continuous);
        assert_ne!(a, b);
        let ColumnStats::Continuous(b) = b else { panic!() };
        assert_eq!((b.sum_pos_grad, b.sum_neg_grad), (2.0, 0.0));
    }
}
