//! Hierarchical, context-aware attention networks for classifying
//! question/answer interview sequences, with the ablations, baselines,
//! fusion schemes and synthetic corpora used to evaluate them.
//!
//! The crate is layered bottom-up:
//!
//! * [`graph`] is a small define-by-run reverse-mode differentiation engine
//!   over dense `f64` tensors.
//! * [`encoders`] and [`attention`] build GRU encoders and pooling blocks on
//!   top of it.
//! * [`model`] assembles the full network and its variants.
//! * [`baselines`] holds the non-sequential and vote references.
//! * [`data`] generates, stores and splits corpora.
//! * [`harness`] trains, evaluates and exports attention.

pub mod attention;
pub mod baselines;
pub mod data;
pub mod encoders;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod params;
pub mod tensor;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId};
pub use params::ParamStore;
pub use tensor::Tensor;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/autodiff.md")]
    mod autodiff {}
    #[doc = include_str!("../../../book/src/attention.md")]
    mod attention {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
