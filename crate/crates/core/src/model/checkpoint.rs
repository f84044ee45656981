//! Versioned JSON checkpoints shared by every trained artefact.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::data::write_atomic;
use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: &str = "hirenet-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    /// Row-major values.
    pub values: Vec<f64>,
}

/// On-disk layout: a format tag, the artefact kind, its configuration and
/// every parameter by canonical name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointFile<C> {
    pub format_version: String,
    pub kind: String,
    pub config: C,
    pub params: Vec<NamedTensor>,
}

impl<C> CheckpointFile<C> {
    pub fn new(kind: &str, config: C, store: &ParamStore) -> Self {
        CheckpointFile {
            format_version: FORMAT_VERSION.into(),
            kind: kind.into(),
            config,
            params: store
                .iter()
                .map(|(name, t)| NamedTensor {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    values: t.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the parameter store, checking every tensor.
    pub fn store(&self) -> Result<ParamStore> {
        let mut store = ParamStore::new();
        for p in &self.params {
            if store.contains(&p.name) {
                return Err(Error::Checkpoint(format!("parameter {} appears twice", p.name)));
            }
            let t = Tensor::new(p.shape.clone(), p.values.clone())
                .map_err(|e| Error::Checkpoint(format!("parameter {}: {e}", p.name)))?;
            store.insert(&p.name, t);
        }
        Ok(store)
    }
}

pub fn write_checkpoint<C: Serialize>(path: &Path, kind: &str, config: &C, store: &ParamStore) -> Result<()> {
    let file = CheckpointFile::new(kind, config, store);
    write_atomic(path, &serde_json::to_vec(&file)?)
}

/// Reads a checkpoint of the given kind and returns its configuration and
/// parameters.
pub fn read_checkpoint<C: DeserializeOwned>(path: &Path, kind: &str) -> Result<(C, ParamStore)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let head: CheckpointFile<serde_json::Value> =
        serde_json::from_slice(&bytes).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    if head.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format {:?}, expected {FORMAT_VERSION:?}",
            head.format_version
        )));
    }
    if head.kind != kind {
        return Err(Error::Checkpoint(format!("expected a {kind} checkpoint, found {}", head.kind)));
    }
    let store = head.store()?;
    let config = C::deserialize(head.config).map_err(|e| Error::Checkpoint(format!("config: {e}")))?;
    Ok((config, store))
}

/// The `kind` field of a checkpoint, without interpreting the rest.
pub fn checkpoint_kind(path: &Path) -> Result<String> {
    #[derive(Deserialize)]
    struct Head {
        kind: String,
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let head: Head = serde_json::from_slice(&bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok(head.kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_kind_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut store = ParamStore::new();
        store.insert("a.w", Tensor::matrix(2, 2, vec![0.1, -1.0 / 3.0, 1e-17, 2.5]).unwrap());
        write_checkpoint(&path, "toy", &7u32, &store).unwrap();
        let (cfg, back): (u32, ParamStore) = read_checkpoint(&path, "toy").unwrap();
        assert_eq!((cfg, back), (7, store));
        assert_eq!(checkpoint_kind(&path).unwrap(), "toy");
        assert!(matches!(read_checkpoint::<u32>(&path, "other"), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn inconsistent_tensor_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let text = r#"{"format_version":"hirenet-checkpoint/1","kind":"toy","config":1,
            "params":[{"name":"w","shape":[2,2],"values":[1.0]}]}"#;
        std::fs::write(&path, text).unwrap();
        assert!(matches!(read_checkpoint::<u32>(&path, "toy"), Err(Error::Checkpoint(_))));
    }
}
