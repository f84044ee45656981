use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Annotation, Interview, Label};
use crate::error::{Error, Result};

/// Majority vote over annotators, where an annotator votes hirable iff they
/// liked or shortlisted the candidate. A tie counts as hirable.
pub fn aggregate_annotations(annotations: &[Annotation]) -> Result<Label> {
    if annotations.is_empty() {
        return Err(Error::degenerate("no annotations to aggregate"));
    }
    let mut votes: BTreeMap<u32, bool> = BTreeMap::new();
    for a in annotations {
        *votes.entry(a.annotator_id).or_default() |= a.liked || a.shortlisted;
    }
    let yes = votes.values().filter(|v| **v).count();
    let no = votes.len() - yes;
    Ok(Label::from_bool(yes >= no))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" | "validation" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            other => Err(Error::Config(format!("unknown split {other}"))),
        }
    }
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Val => "val",
            SplitName::Test => "test",
        }
    }
}

/// Candidate ids assigned to each split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    pub fn ids(&self, which: SplitName) -> &[String] {
        match which {
            SplitName::Train => &self.train,
            SplitName::Val => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    /// The interviews of `corpus` belonging to `which`, in split order.
    /// Candidates missing from `corpus` are skipped.
    pub fn select<'a>(&self, corpus: &'a [Interview], which: SplitName) -> Vec<&'a Interview> {
        let by_id: BTreeMap<&str, &Interview> =
            corpus.iter().map(|i| (i.candidate_id.as_str(), i)).collect();
        self.ids(which)
            .iter()
            .filter_map(|id| by_id.get(id.as_str()).copied())
            .collect()
    }
}

/// Stratified 80/10/10 split at candidate level.
///
/// Each class is shuffled with `seed` and its members are spread evenly
/// over one merged ordering; the first `⌊0.8N⌋` candidates form the
/// training split, the next `⌊0.1N⌋` validation, and the rest test.
pub fn split_corpus(corpus: &[Interview], seed: u64) -> Result<Split> {
    let n = corpus.len();
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    if n_train == 0 || n_val == 0 || n - n_train - n_val == 0 {
        return Err(Error::degenerate(format!(
            "{n} candidates cannot fill three non-empty splits"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, u8, usize, &str)> = Vec::with_capacity(n);
    for (class, label) in [(0u8, Label::Hirable), (1u8, Label::NotHirable)] {
        let mut ids: Vec<&str> = corpus
            .iter()
            .filter(|i| i.label == label)
            .map(|i| i.candidate_id.as_str())
            .collect();
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let m = ids.len() as f64;
        for (k, id) in ids.into_iter().enumerate() {
            keyed.push(((k as f64 + 0.5) / m, class, k, id));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let ids: Vec<String> = keyed.into_iter().map(|k| k.3.to_string()).collect();
    Ok(Split {
        train: ids[..n_train].to_vec(),
        validation: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
    })
}
