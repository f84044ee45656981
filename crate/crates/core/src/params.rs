//! Named parameter storage and initialisation.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// How a parameter is initialised.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    Glorot,
    Zeros,
    Uniform(f64),
}

/// Declared name, shape and initialiser of one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, init: Init) -> Self {
        ParamSpec {
            name: name.into(),
            shape,
            init,
        }
    }

    /// The largest magnitude the initialiser can produce.
    pub fn init_bound(&self) -> f64 {
        match self.init {
            Init::Glorot => {
                let (fan_out, fan_in) = match self.shape.as_slice() {
                    [r, c] => (*r, *c),
                    [n] => (1, *n),
                    _ => (1, 1),
                };
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            }
            Init::Zeros => 0.0,
            Init::Uniform(b) => b,
        }
    }
}

/// Parameters addressed by canonical dotted name, iterated in name order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    tensors: BTreeMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Initialises every spec from a generator seeded with `seed`, in the
    /// order given.
    pub fn init(specs: &[ParamSpec], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        for spec in specs {
            let n: usize = spec.shape.iter().product();
            let bound = spec.init_bound();
            let data = match spec.init {
                Init::Zeros => vec![0.0; n],
                _ => (0..n).map(|_| rng.gen_range(-bound..=bound)).collect(),
            };
            store.insert(&spec.name, Tensor::from_parts(spec.shape.clone(), data));
        }
        store
    }

    pub fn insert(&mut self, name: &str, t: Tensor) {
        self.tensors.insert(name.to_string(), t);
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar entries.
    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// A zero tensor for every parameter.
    pub fn zeros_like(&self) -> ParamStore {
        ParamStore {
            tensors: self
                .tensors
                .iter()
                .map(|(k, t)| (k.clone(), Tensor::zeros(t.shape().to_vec())))
                .collect(),
        }
    }

    /// Checks that every spec is present with the declared shape and that
    /// no extra parameters exist.
    pub fn validate(&self, specs: &[ParamSpec]) -> Result<()> {
        for spec in specs {
            let t = self
                .tensors
                .get(&spec.name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {}", spec.name)))?;
            if t.shape() != spec.shape.as_slice() {
                return Err(Error::Checkpoint(format!(
                    "parameter {} has shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
        }
        if self.tensors.len() != specs.len() {
            let extra: Vec<_> = self
                .tensors
                .keys()
                .filter(|k| !specs.iter().any(|s| &s.name == *k))
                .collect();
            return Err(Error::Checkpoint(format!("unexpected parameters {extra:?}")));
        }
        Ok(())
    }
}

/// Gradients keyed like a [`ParamStore`], summed across examples.
#[derive(Clone, Debug)]
pub struct GradAccumulator {
    sums: ParamStore,
}

impl GradAccumulator {
    pub fn new(params: &ParamStore) -> Self {
        GradAccumulator {
            sums: params.zeros_like(),
        }
    }

    pub fn add(&mut self, grads: &BTreeMap<String, Tensor>, scale: f64) -> Result<()> {
        for (name, g) in grads {
            let acc = self.sums.get_mut(name)?;
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += scale * b;
            }
        }
        Ok(())
    }

    pub fn global_norm(&self) -> f64 {
        self.sums.iter().map(|(_, t)| t.sum_squares()).sum::<f64>().sqrt()
    }

    /// Rescales so the global norm is at most `max_norm`.
    pub fn clip(&mut self, max_norm: f64) {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let s = max_norm / norm;
            for (_, t) in self.sums.iter_mut() {
                t.data_mut().iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    pub fn into_store(self) -> ParamStore {
        self.sums
    }

    pub fn as_store(&self) -> &ParamStore {
        &self.sums
    }
}
