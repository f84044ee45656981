use serde::{Deserialize, Serialize};

use super::kmeans::Codebook;
use crate::error::{Error, Result};

/// Number of training documents containing each word.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocFreqs {
    pub n_docs: usize,
    pub df: Vec<usize>,
}

impl DocFreqs {
    /// Counts over documents given as word-id lists in `0..vocab`.
    pub fn from_documents<'a>(docs: impl IntoIterator<Item = &'a [usize]>, vocab: usize) -> Result<Self> {
        let mut df = vec![0; vocab];
        let mut n_docs = 0;
        let mut seen = vec![usize::MAX; vocab];
        for (d, words) in docs.into_iter().enumerate() {
            n_docs += 1;
            for &w in words {
                if w >= vocab {
                    return Err(Error::Lookup { id: w, vocab });
                }
                if seen[w] != d {
                    seen[w] = d;
                    df[w] += 1;
                }
            }
        }
        Ok(DocFreqs { n_docs, df })
    }

    /// `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, word: usize) -> f64 {
        ((1 + self.n_docs) as f64 / (1 + self.df[word]) as f64).ln() + 1.0
    }

    pub fn vocab(&self) -> usize {
        self.df.len()
    }
}

/// Term frequency (count over length) times smoothed idf.
pub fn tfidf(words: &[usize], dfs: &DocFreqs) -> Result<Vec<f64>> {
    if words.is_empty() {
        return Err(Error::degenerate("cannot encode an empty document"));
    }
    let mut counts = vec![0usize; dfs.vocab()];
    for &w in words {
        if w >= counts.len() {
            return Err(Error::Lookup { id: w, vocab: counts.len() });
        }
        counts[w] += 1;
    }
    let n = words.len() as f64;
    Ok(counts
        .iter()
        .enumerate()
        .map(|(w, &c)| if c == 0 { 0.0 } else { c as f64 / n * dfs.idf(w) })
        .collect())
}

/// Quantises every frame to its nearest centroid.
pub fn quantise(answer: &[Vec<f64>], codebook: &Codebook) -> Vec<usize> {
    answer.iter().map(|f| codebook.nearest(f)).collect()
}

/// Bag-of-codewords tf-idf vector of one answer.
pub fn bow_encode(answer: &[Vec<f64>], codebook: &Codebook, dfs: &DocFreqs) -> Result<Vec<f64>> {
    if answer.is_empty() {
        return Err(Error::degenerate("cannot encode an answer without frames"));
    }
    if dfs.vocab() != codebook.k() {
        return Err(Error::contract(format!(
            "document frequencies cover {} words but the codebook has {}",
            dfs.vocab(),
            codebook.k()
        )));
    }
    tfidf(&quantise(answer, codebook), dfs)
}
