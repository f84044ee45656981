use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::evaluate::evaluate;
use crate::data::{Interview, Label};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::metrics::Metrics;
use crate::model::{HireNet, HireNetConfig, Padding};
use crate::params::GradAccumulator;

/// Shuffling stream, kept apart from the initialisation stream.
const SHUFFLE_STREAM: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean training loss over the epoch's examples.
    pub train_loss: f64,
    pub validation: Metrics,
    pub validation_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; the earliest among equal F1s.
    pub best_epoch: usize,
    pub best_validation: Metrics,
    /// Mean training loss of the initial parameters, when requested.
    pub initial_train_loss: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub seed: u64,
    pub config: HireNetConfig,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Where the best parameters are written whenever they improve.
    pub checkpoint: Option<PathBuf>,
    pub record_initial_loss: bool,
    /// Called after every epoch.
    pub on_epoch: Option<fn(&EpochRecord)>,
}

/// Mean loss of `model` over `data` without updating anything.
pub fn mean_loss(model: &HireNet, data: &[&Interview]) -> Result<f64> {
    let mut total = 0.0;
    for i in data {
        let mut g = Graph::new();
        let f = model.build(&mut g, i, &Padding::none())?;
        let loss = f.loss(&mut g, i.label)?;
        total += g.scalar(loss);
    }
    Ok(total / data.len() as f64)
}

/// One optimiser step over a padded mini-batch; returns the summed loss.
fn train_batch(model: &mut HireNet, adam: &mut Adam, batch: &[&Interview]) -> Result<f64> {
    let padding = Padding::for_batch(batch);
    let mut acc = GradAccumulator::new(model.params());
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for i in batch {
        let mut g = Graph::new();
        let f = model.build(&mut g, i, &padding)?;
        let loss = f.loss(&mut g, i.label)?;
        let value = g.scalar(loss);
        let grads = g.backward(loss)?;
        acc.add(&grads, scale)?;
        total += value;
    }
    let norm = acc.global_norm();
    if !norm.is_finite() {
        return Err(Error::Numeric(format!(
            "gradient norm is {norm} on a batch starting with {}",
            batch[0].candidate_id
        )));
    }
    acc.clip(model.config().train.clip_norm);
    adam.step(model.params_mut(), acc.as_store())?;
    Ok(total)
}

/// Mini-batch training with early stopping on validation F1. Returns the
/// model restored to its best epoch.
pub fn train(
    train_set: &[&Interview],
    validation: &[&Interview],
    config: &HireNetConfig,
    options: &TrainOptions,
) -> Result<(HireNet, TrainReport)> {
    if train_set.is_empty() || validation.is_empty() {
        return Err(Error::degenerate("training needs non-empty train and validation splits"));
    }
    let positives = train_set.iter().filter(|i| i.label == Label::Hirable).count();
    if positives == 0 || positives == train_set.len() {
        return Err(Error::contract("the training split holds a single class"));
    }
    let mut model = HireNet::init(config.clone())?;
    let settings = config.train.clone();
    let initial_train_loss = match options.record_initial_loss {
        true => Some(mean_loss(&model, train_set)?),
        false => None,
    };
    let mut adam = Adam::new(model.params(), &settings);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(SHUFFLE_STREAM);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut epochs = Vec::new();
    let mut best: Option<(usize, Metrics, HireNet)> = None;
    for epoch in 1..=settings.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(settings.batch_size) {
            let batch: Vec<&Interview> = chunk.iter().map(|&k| train_set[k]).collect();
            total += train_batch(&mut model, &mut adam, &batch)?;
        }
        let train_loss = total / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!("training loss diverged at epoch {epoch}")));
        }
        let validation_loss = mean_loss(&model, validation)?;
        let validation = evaluate(&model, validation)?.metrics;
        let record = EpochRecord {
            epoch,
            train_loss,
            validation,
            validation_loss,
        };
        if let Some(cb) = options.on_epoch {
            cb(&record);
        }
        epochs.push(record);

        let improved = best.as_ref().is_none_or(|(_, m, _)| validation.f1 > m.f1);
        if improved {
            if let Some(path) = &options.checkpoint {
                model.save(path)?;
            }
            best = Some((epoch, validation, model.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.0);
        if epoch - best_epoch >= settings.patience {
            break;
        }
    }
    let (best_epoch, best_validation, best_model) = best.expect("max_epochs >= 1 runs an epoch");
    Ok((
        best_model,
        TrainReport {
            epochs,
            best_epoch,
            best_validation,
            initial_train_loss,
            checkpoint: options.checkpoint.clone(),
            seed: config.seed,
            config: config.clone(),
        },
    ))
}

impl TrainReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::data::write_atomic(path, &serde_json::to_vec_pretty(self)?)
    }

    pub fn final_train_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.train_loss)
    }
}
