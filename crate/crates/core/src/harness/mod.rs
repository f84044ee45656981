//! Training, evaluation and attention export.

mod adam;
mod evaluate;
mod export;
mod train;

pub use adam::Adam;
pub use evaluate::{evaluate, write_metrics_csv, write_scores_csv, CandidateScore, Evaluation, MetricsRow};
pub use export::{export_attention, AttentionReport, AttentionStep};
pub use train::{mean_loss, train, EpochRecord, TrainOptions, TrainReport};
pub use crate::metrics::{compute_metrics, Metrics};
