//! Non-sequential answer-level baselines and vote references.

mod bow;
mod kmeans;
mod logistic;
mod pipeline;
mod stats;
mod votes;

pub use bow::{bow_encode, quantise, tfidf, DocFreqs};
pub use kmeans::{kmeans_fit, kmeans_fit_traced, Codebook, KMeansFit};
pub use logistic::{fit_logistic, train_linear_classifier, LogisticFit, LogisticModel, LogisticSettings};
pub use pipeline::{
    candidate_score_from_answers, AnswerBaseline, BaselineKind, BaselineSettings, Standardizer, BASELINE_KIND,
};
pub use stats::{aggregate_stats, BinaryStats, ColumnStats, ContinuousStats, StatVector};
pub use votes::{position_majority, vote_baselines, RandomVote, VoteReport};
