use std::path::Path;

use serde::{Deserialize, Serialize};

use super::bow::{quantise, tfidf, DocFreqs};
use super::kmeans::{kmeans_fit, Codebook};
use super::logistic::{train_linear_classifier, LogisticModel};
use super::stats::aggregate_stats;
use crate::data::{FeatureKind, Interview, Label, Modality, QaPair};
use crate::error::{Error, Result};
use crate::model::{read_checkpoint, write_checkpoint};
use crate::params::ParamStore;
use crate::tensor::Tensor;

/// Mean of the answer scores, thresholded.
pub fn candidate_score_from_answers(scores: &[f64], threshold: f64) -> Result<(f64, Label)> {
    if scores.is_empty() {
        return Err(Error::degenerate("no answer scores to aggregate"));
    }
    let s = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((s, Label::from_bool(s >= threshold)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    /// Per-column statistics of each answer.
    Stats,
    /// Bag of codewords (frames quantised by k-means, or raw tokens for
    /// text) weighted by tf-idf.
    Bow,
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stats" => Ok(BaselineKind::Stats),
            "bow" => Ok(BaselineKind::Bow),
            other => Err(Error::Config(format!("unknown baseline kind {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub l2: f64,
    /// Codebook size for descriptor streams.
    pub k: usize,
    pub kmeans_iters: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            l2: 1e-3,
            k: 64,
            kmeans_iters: 50,
            seed: 0,
            threshold: 0.5,
        }
    }
}

/// Per-feature z-scoring fitted on training vectors. Constant features keep
/// unit scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self> {
        let first = xs.first().ok_or_else(|| Error::degenerate("no vectors to standardise"))?;
        let n = xs.len() as f64;
        let mut mean = vec![0.0; first.len()];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; first.len()];
        for x in xs {
            for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// An answer-level encoder plus logistic head; candidates are scored by the
/// mean of their answer scores.
#[derive(Clone, Debug, PartialEq)]
pub struct AnswerBaseline {
    pub kind: BaselineKind,
    pub modality: Modality,
    pub settings: BaselineSettings,
    pub feature_kinds: Vec<FeatureKind>,
    pub codebook: Option<Codebook>,
    pub doc_freqs: Option<DocFreqs>,
    pub scaler: Standardizer,
    pub model: LogisticModel,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: BaselineKind,
    modality: Modality,
    settings: BaselineSettings,
    feature_kinds: Vec<FeatureKind>,
    doc_freqs: Option<DocFreqs>,
}

pub const BASELINE_KIND: &str = "answer-baseline";

fn words(qa: &QaPair, codebook: Option<&Codebook>) -> Vec<usize> {
    match codebook {
        Some(book) => quantise(&qa.answer, book),
        None => qa.answer.iter().map(|r| r[0] as usize).collect(),
    }
}

impl AnswerBaseline {
    /// Fits the encoder and classifier on the answers of `train`, each
    /// labelled with its candidate's label. `vocab` is only used for text.
    pub fn fit(
        kind: BaselineKind,
        train: &[&Interview],
        feature_kinds: &[FeatureKind],
        vocab: usize,
        settings: BaselineSettings,
    ) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::degenerate("baseline needs training candidates"))?;
        let modality = first.qa[0].modality;
        let answers: Vec<&QaPair> = train.iter().flat_map(|i| &i.qa).collect();
        let labels: Vec<Label> = train.iter().flat_map(|i| i.qa.iter().map(|_| i.label)).collect();
        let (codebook, doc_freqs) = match (kind, modality) {
            (BaselineKind::Stats, Modality::Text) => {
                return Err(Error::Config("the statistics baseline needs descriptor streams, not text".into()))
            }
            (BaselineKind::Stats, _) => (None, None),
            (BaselineKind::Bow, m) => {
                let codebook = match m {
                    Modality::Text => None,
                    _ => {
                        let frames: Vec<Vec<f64>> = answers.iter().flat_map(|qa| qa.answer.iter().cloned()).collect();
                        Some(kmeans_fit(&frames, settings.k, settings.seed, settings.kmeans_iters)?)
                    }
                };
                let docs: Vec<Vec<usize>> = answers.iter().map(|qa| words(qa, codebook.as_ref())).collect();
                let size = codebook.as_ref().map_or(vocab, Codebook::k);
                let dfs = DocFreqs::from_documents(docs.iter().map(Vec::as_slice), size)?;
                (codebook, Some(dfs))
            }
        };
        let mut b = AnswerBaseline {
            kind,
            modality,
            settings,
            feature_kinds: feature_kinds.to_vec(),
            codebook,
            doc_freqs,
            scaler: Standardizer {
                mean: Vec::new(),
                scale: Vec::new(),
            },
            model: LogisticModel::zeros(0),
        };
        let raw = answers.iter().map(|qa| b.raw_features(qa)).collect::<Result<Vec<_>>>()?;
        b.scaler = Standardizer::fit(&raw)?;
        let xs: Vec<Vec<f64>> = raw.iter().map(|x| b.scaler.apply(x)).collect();
        b.model = train_linear_classifier(&xs, &labels, b.settings.l2)?;
        Ok(b)
    }

    fn raw_features(&self, qa: &QaPair) -> Result<Vec<f64>> {
        if qa.modality != self.modality {
            return Err(Error::contract(format!(
                "baseline reads {} answers, got {}",
                self.modality, qa.modality
            )));
        }
        match self.kind {
            BaselineKind::Stats => Ok(aggregate_stats(&qa.answer, &self.feature_kinds)?.to_features()),
            BaselineKind::Bow => {
                let dfs = self
                    .doc_freqs
                    .as_ref()
                    .ok_or_else(|| Error::contract("bag-of-words baseline without document frequencies"))?;
                tfidf(&words(qa, self.codebook.as_ref()), dfs)
            }
        }
    }

    /// Standardised feature vector of one answer.
    pub fn encode_answer(&self, qa: &QaPair) -> Result<Vec<f64>> {
        Ok(self.scaler.apply(&self.raw_features(qa)?))
    }

    pub fn answer_score(&self, qa: &QaPair) -> Result<f64> {
        Ok(self.model.score(&self.encode_answer(qa)?))
    }

    pub fn predict(&self, interview: &Interview) -> Result<(f64, Label)> {
        let scores = interview
            .qa
            .iter()
            .map(|qa| self.answer_score(qa))
            .collect::<Result<Vec<_>>>()?;
        candidate_score_from_answers(&scores, self.settings.threshold)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut store = ParamStore::new();
        store.insert("scaler.mean", Tensor::vector(self.scaler.mean.clone())?);
        store.insert("scaler.scale", Tensor::vector(self.scaler.scale.clone())?);
        store.insert("logistic.w", Tensor::vector(self.model.w.clone())?);
        store.insert("logistic.b", Tensor::vector(vec![self.model.b])?);
        if let Some(book) = &self.codebook {
            store.insert(
                "codebook.centroids",
                Tensor::matrix(book.k(), book.dim(), book.centroids().concat())?,
            );
        }
        let header = Header {
            kind: self.kind,
            modality: self.modality,
            settings: self.settings.clone(),
            feature_kinds: self.feature_kinds.clone(),
            doc_freqs: self.doc_freqs.clone(),
        };
        write_checkpoint(path, BASELINE_KIND, &header, &store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (h, store): (Header, ParamStore) = read_checkpoint(path, BASELINE_KIND)?;
        let vec = |name: &str| -> Result<Vec<f64>> {
            store
                .get(name)
                .map(|t| t.data().to_vec())
                .map_err(|_| Error::Checkpoint(format!("missing parameter {name}")))
        };
        let codebook = match store.get("codebook.centroids") {
            Ok(t) => Some(Codebook::new((0..t.rows()).map(|r| t.row(r).to_vec()).collect())?),
            Err(_) => None,
        };
        let b = vec("logistic.b")?;
        let w = vec("logistic.w")?;
        let scaler = Standardizer {
            mean: vec("scaler.mean")?,
            scale: vec("scaler.scale")?,
        };
        if b.len() != 1 || scaler.mean.len() != w.len() || scaler.scale.len() != w.len() {
            return Err(Error::Checkpoint("baseline parameter widths disagree".into()));
        }
        Ok(AnswerBaseline {
            kind: h.kind,
            modality: h.modality,
            settings: h.settings,
            feature_kinds: h.feature_kinds,
            codebook,
            doc_freqs: h.doc_freqs,
            scaler,
            model: LogisticModel { w, b: b[0] },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_corpus, GeneratorSpec};

    #[test]
    fn candidate_score_examples() {
        assert_eq!(candidate_score_from_answers(&[0.9], 0.5).unwrap(), (0.9, Label::Hirable));
        let (s, l) = candidate_score_from_answers(&[0.4, 0.8], 0.5).unwrap();
        assert!((s - 0.6).abs() < 1e-15 && l == Label::Hirable);
        assert_eq!(
            candidate_score_from_answers(&[0.4, 0.8], 0.5).unwrap(),
            candidate_score_from_answers(&[0.8, 0.4], 0.5).unwrap()
        );
        assert!(matches!(candidate_score_from_answers(&[], 0.5), Err(Error::Degenerate(_))));
    }

    #[test]
    fn baselines_fit_save_and_reload() {
        let spec = GeneratorSpec {
            candidates: 40,
            positions: 4,
            answer_len_min: 5,
            answer_len_max: 8,
            ..GeneratorSpec::default()
        };
        let g = generate_corpus(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for (kind, m) in [
            (BaselineKind::Stats, Modality::Video),
            (BaselineKind::Bow, Modality::Audio),
            (BaselineKind::Bow, Modality::Text),
        ] {
            let train: Vec<&Interview> = g.corpus(m).iter().collect();
            let settings = BaselineSettings {
                k: 8,
                ..BaselineSettings::default()
            };
            let b = AnswerBaseline::fit(kind, &train, &spec.feature_kinds(m), spec.vocab_size(), settings).unwrap();
            let path = dir.path().join("b.json");
            b.save(&path).unwrap();
            let back = AnswerBaseline::load(&path).unwrap();
            assert_eq!(back, b);
            assert_eq!(back.predict(train[0]).unwrap(), b.predict(train[0]).unwrap());
        }
        let text: Vec<&Interview> = g.corpus(Modality::Text).iter().collect();
        assert!(AnswerBaseline::fit(BaselineKind::Stats, &text, &[], 10, BaselineSettings::default()).is_err());
    }
}
