#![allow(dead_code)]

pub mod gradients;
pub mod invariants;
pub mod oracle;

use hirenet::data::{Interview, Label, Modality, QaPair};
use hirenet::model::{HireNet, HireNetConfig, Variant};
use hirenet::ParamStore;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random interview with at most `max_questions` answers of at most
/// `max_frames` frames.
pub fn random_interview(
    rng: &mut ChaCha8Rng,
    id: &str,
    modality: Modality,
    feature_dim: usize,
    vocab: usize,
    max_questions: usize,
    max_frames: usize,
) -> Interview {
    let n = rng.gen_range(1..=max_questions);
    let tokens = |rng: &mut ChaCha8Rng, max: usize| -> Vec<usize> {
        let len = rng.gen_range(1..=max);
        (0..len).map(|_| rng.gen_range(0..vocab)).collect()
    };
    let qa = (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=max_frames);
            let answer = (0..len)
                .map(|_| match modality {
                    Modality::Text => vec![rng.gen_range(0..vocab) as f64],
                    _ => (0..feature_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect();
            QaPair {
                q_tokens: tokens(rng, 3),
                answer,
                modality,
            }
        })
        .collect();
    Interview {
        candidate_id: id.into(),
        job_tokens: tokens(rng, 3),
        qa,
        label: Label::from_bool(rng.gen_bool(0.5)),
        annotations: None,
    }
}

/// A network whose parameters are all redrawn from `U(-scale, scale)`.
pub fn random_model(config: HireNetConfig, rng: &mut ChaCha8Rng, scale: f64) -> HireNet {
    let mut model = HireNet::init(config).unwrap();
    randomise(model.params_mut(), rng, scale);
    model
}

pub fn randomise(store: &mut ParamStore, rng: &mut ChaCha8Rng, scale: f64) {
    for (_, t) in store.iter_mut() {
        for v in t.data_mut() {
            *v = rng.gen_range(-scale..scale);
        }
    }
}

/// Small configuration with every width set to `dim`.
pub fn toy_config(variant: Variant, modality: Modality, feature_dim: usize, vocab: usize, dim: usize) -> HireNetConfig {
    let feature_dim = if modality == Modality::Text { 1 } else { feature_dim };
    HireNetConfig::uniform(variant, modality, feature_dim, vocab, dim)
}
