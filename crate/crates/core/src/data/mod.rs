//! Interview records, corpus files, label aggregation and splitting.

mod generator;
mod io;
mod protocol;

pub use generator::{generate_corpus, GeneratedCorpus, GeneratorSpec, JobRule, Motif, PlantedAnswer, Planting};
pub use io::{load_corpus, read_corpus, save_corpus, write_atomic, DataDir, DatasetMeta};
pub use protocol::{aggregate_annotations, split_corpus, Split, SplitName};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source of an answer's low-level descriptors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    /// Rows are single token ids.
    Text,
    /// Continuous per-frame descriptors.
    Audio,
    /// Binary activations followed by continuous descriptors.
    Video,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Audio, Modality::Video];

    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Audio => "audio",
            Modality::Video => "video",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Modality::Text),
            "audio" => Ok(Modality::Audio),
            "video" => Ok(Modality::Video),
            other => Err(Error::Config(format!("unknown modality {other}"))),
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary recruiter judgement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Hirable,
    NotHirable,
}

impl Label {
    pub fn from_bool(hirable: bool) -> Self {
        if hirable {
            Label::Hirable
        } else {
            Label::NotHirable
        }
    }

    pub fn is_hirable(self) -> bool {
        self == Label::Hirable
    }

    /// 1.0 for hirable, 0.0 otherwise.
    pub fn target(self) -> f64 {
        if self.is_hirable() {
            1.0
        } else {
            0.0
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(self.is_hirable()))
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Label::NotHirable),
            1 => Ok(Label::Hirable),
            other => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {other}"))),
        }
    }
}

/// One recruiter's reaction to a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator_id: u32,
    pub liked: bool,
    pub shortlisted: bool,
    pub disliked: bool,
}

/// A question and the candidate's answer to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub q_tokens: Vec<usize>,
    /// `l_A × featureDim` descriptors; text answers hold one token id per row.
    pub answer: Vec<Vec<f64>>,
    pub modality: Modality,
}

/// A job title and an ordered list of question/answer pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interview {
    pub candidate_id: String,
    pub job_tokens: Vec<usize>,
    pub qa: Vec<QaPair>,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<Annotation>>,
}

impl Interview {
    pub fn num_questions(&self) -> usize {
        self.qa.len()
    }

    /// Width of the answer descriptors (zero when there are no frames).
    pub fn feature_dim(&self) -> usize {
        self.qa
            .first()
            .and_then(|q| q.answer.first())
            .map_or(0, Vec::len)
    }

    /// Checks every structural invariant of an interview.
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Error::Validation {
            candidate: self.candidate_id.clone(),
            message,
        };
        if self.candidate_id.is_empty() {
            return Err(Error::Validation {
                candidate: "<empty>".into(),
                message: "candidate id is empty".into(),
            });
        }
        if self.job_tokens.is_empty() {
            return Err(fail("job title has no tokens".into()));
        }
        if self.qa.is_empty() {
            return Err(fail("interview has no question/answer pairs".into()));
        }
        let width = self.feature_dim();
        for (i, qa) in self.qa.iter().enumerate() {
            if qa.q_tokens.is_empty() {
                return Err(fail(format!("question {i} has no tokens")));
            }
            if qa.answer.is_empty() {
                return Err(fail(format!("answer {i} has no frames")));
            }
            if qa.modality != self.qa[0].modality {
                return Err(fail(format!("answer {i} mixes modalities")));
            }
            for (t, row) in qa.answer.iter().enumerate() {
                if row.len() != width || width == 0 {
                    return Err(fail(format!(
                        "answer {i} frame {t} has {} values, expected {width}",
                        row.len()
                    )));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(fail(format!("answer {i} frame {t} is not finite")));
                }
                if qa.modality == Modality::Text && (width != 1 || row[0] < 0.0 || row[0].fract() != 0.0) {
                    return Err(fail(format!("answer {i} frame {t} is not a token id")));
                }
            }
        }
        if let Some(a) = &self.annotations {
            for ann in a {
                if !(ann.liked || ann.shortlisted || ann.disliked) {
                    return Err(fail(format!("annotation by {} sets no field", ann.annotator_id)));
                }
            }
        }
        Ok(())
    }
}

/// Column type of a descriptor, used by the statistical baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Binary,
}
