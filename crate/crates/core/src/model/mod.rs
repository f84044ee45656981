//! The hierarchical network, its ablations, checkpoints and fusion.

mod checkpoint;
mod config;
mod fusion;
mod network;

pub use checkpoint::{checkpoint_kind, read_checkpoint, write_checkpoint, CheckpointFile, NamedTensor, FORMAT_VERSION};
pub use config::{HireNetConfig, TrainSettings, Variant};
pub use fusion::{early_fusion, late_fusion, EarlyFusion};
pub use network::{
    bce_loss, build_graph, forward_interview, init_model, param_specs, Forward, HireNet, Padding, Prediction,
    EMBED_INIT,
};

use std::path::Path;

use crate::error::Result;

/// Checkpoint kind of a trained network.
pub const MODEL_KIND: &str = "hirenet-model";

impl HireNet {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_checkpoint(path, MODEL_KIND, self.config(), self.params())
    }

    /// Loads a network, validating every parameter against the dimensions
    /// its configuration implies.
    pub fn load(path: &Path) -> Result<Self> {
        let (config, params) = read_checkpoint(path, MODEL_KIND)?;
        HireNet::from_parts(config, params).map_err(|e| match e {
            crate::Error::Checkpoint(m) => crate::Error::Checkpoint(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
