use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Modality;
use crate::error::{Error, Result};

/// Which pooling the network uses, or the flat answer-level baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Context attention at both levels.
    #[serde(rename = "hirenet")]
    HireNet,
    /// Self attention at both levels; no job encoder.
    #[serde(rename = "hn_satt")]
    HnSatt,
    /// Masked averaging at both levels.
    #[serde(rename = "hn_avg")]
    HnAvg,
    /// One BiGRU per answer with a logistic head on its end states,
    /// trained answer by answer.
    #[serde(rename = "bigru", alias = "bigru_answerwise")]
    BigruAnswerwise,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::HireNet, Variant::HnSatt, Variant::HnAvg, Variant::BigruAnswerwise];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::HireNet => "hirenet",
            Variant::HnSatt => "hn_satt",
            Variant::HnAvg => "hn_avg",
            Variant::BigruAnswerwise => "bigru",
        }
    }

    pub fn is_hierarchical(self) -> bool {
        self != Variant::BigruAnswerwise
    }

    pub fn has_attention(self) -> bool {
        matches!(self, Variant::HireNet | Variant::HnSatt)
    }

    pub fn uses_context(self) -> bool {
        self == Variant::HireNet
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hirenet" => Ok(Variant::HireNet),
            "hn_satt" => Ok(Variant::HnSatt),
            "hn_avg" => Ok(Variant::HnAvg),
            "bigru" | "bigru_answerwise" => Ok(Variant::BigruAnswerwise),
            other => Err(Error::Config(format!("unknown variant {other}"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimiser and stopping settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 16,
            max_epochs: 50,
            patience: 5,
            clip_norm: 5.0,
        }
    }
}

/// Architecture, data dimensions and training settings of one model.
///
/// `feature_dim` and `vocab_size` describe the data and are normally filled
/// in from a dataset's metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HireNetConfig {
    pub variant: Variant,
    pub modality: Modality,
    pub feature_dim: usize,
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub low_hidden: usize,
    pub question_hidden: usize,
    pub high_hidden: usize,
    pub job_hidden: usize,
    /// Low-level attention width; defaults to the answer state width.
    pub low_attn_dim: Option<usize>,
    /// High-level attention width; defaults to the interview state width.
    pub high_attn_dim: Option<usize>,
    /// Text answers reuse the question/job embedding table.
    pub share_embeddings: bool,
    pub seed: u64,
    pub threshold: f64,
    pub train: TrainSettings,
}

impl Default for HireNetConfig {
    fn default() -> Self {
        HireNetConfig {
            variant: Variant::HireNet,
            modality: Modality::Text,
            feature_dim: 1,
            vocab_size: 0,
            embed_dim: 32,
            low_hidden: 64,
            question_hidden: 64,
            high_hidden: 64,
            job_hidden: 64,
            low_attn_dim: None,
            high_attn_dim: None,
            share_embeddings: true,
            seed: 0,
            threshold: 0.5,
            train: TrainSettings::default(),
        }
    }
}

impl HireNetConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    /// The same hidden width everywhere; handy for small experiments.
    pub fn uniform(variant: Variant, modality: Modality, feature_dim: usize, vocab_size: usize, dim: usize) -> Self {
        HireNetConfig {
            variant,
            modality,
            feature_dim,
            vocab_size,
            embed_dim: dim,
            low_hidden: dim,
            question_hidden: dim,
            high_hidden: dim,
            job_hidden: dim,
            ..HireNetConfig::default()
        }
    }

    pub fn low_state_dim(&self) -> usize {
        2 * self.low_hidden
    }

    pub fn high_input_dim(&self) -> usize {
        self.question_hidden + self.low_state_dim()
    }

    pub fn high_state_dim(&self) -> usize {
        2 * self.high_hidden
    }

    pub fn low_attn(&self) -> usize {
        self.low_attn_dim.unwrap_or(self.low_state_dim())
    }

    pub fn high_attn(&self) -> usize {
        self.high_attn_dim.unwrap_or(self.high_state_dim())
    }

    /// Width of one answer step fed to the answer encoder.
    pub fn answer_input_dim(&self) -> usize {
        match self.modality {
            Modality::Text => self.embed_dim,
            _ => self.feature_dim,
        }
    }

    /// Width of the representation passed to the classifier.
    pub fn representation_dim(&self) -> usize {
        if self.variant.is_hierarchical() {
            self.high_state_dim()
        } else {
            self.low_state_dim()
        }
    }

    /// Name of the embedding table text answers are read through.
    pub fn answer_embedding(&self) -> Option<&'static str> {
        match self.modality {
            Modality::Text if self.share_embeddings || !self.variant.is_hierarchical() => Some(EMBED_WORDS),
            Modality::Text => Some(EMBED_ANSWER),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("feature_dim", self.feature_dim),
            ("embed_dim", self.embed_dim),
            ("low_hidden", self.low_hidden),
            ("question_hidden", self.question_hidden),
            ("high_hidden", self.high_hidden),
            ("job_hidden", self.job_hidden),
            ("low_attn_dim", self.low_attn()),
            ("high_attn_dim", self.high_attn()),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, d)| *d == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        let needs_vocab = self.variant.is_hierarchical() || self.modality == Modality::Text;
        if needs_vocab && self.vocab_size == 0 {
            return Err(Error::Config("vocab_size must be at least 1".into()));
        }
        if self.modality == Modality::Text && self.feature_dim != 1 {
            return Err(Error::Config("text answers have feature_dim 1 (one token id per row)".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config("threshold must lie in (0, 1)".into()));
        }
        let t = &self.train;
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !((0.0..1.0).contains(&t.beta1) && (0.0..1.0).contains(&t.beta2) && t.adam_eps > 0.0) {
            return Err(Error::Config("moment decays must lie in [0, 1) and adam_eps be positive".into()));
        }
        if t.batch_size == 0 || t.max_epochs == 0 {
            return Err(Error::Config("batch_size and max_epochs must be at least 1".into()));
        }
        if !(t.clip_norm > 0.0) {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) const EMBED_WORDS: &str = "embed.words";
pub(crate) const EMBED_ANSWER: &str = "embed.answer";
