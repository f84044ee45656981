use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{split_corpus, FeatureKind, GeneratedCorpus, GeneratorSpec, Interview, Modality, Planting, Split};
use crate::error::{Error, Result};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Serialises a corpus as JSON Lines, one interview per line.
pub fn save_corpus(path: &Path, corpus: &[Interview]) -> Result<()> {
    let mut buf = Vec::new();
    for interview in corpus {
        serde_json::to_writer(&mut buf, interview)?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

/// Parses and validates a JSON Lines corpus from any reader. Blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn read_corpus(reader: impl Read) -> Result<Vec<Interview>> {
    let mut corpus = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let interview: Interview = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        interview.validate()?;
        if !seen.insert(interview.candidate_id.clone()) {
            return Err(Error::Validation {
                candidate: interview.candidate_id,
                message: format!("duplicate candidate id at line {line_no}"),
            });
        }
        corpus.push(interview);
    }
    Ok(corpus)
}

pub fn load_corpus(path: &Path) -> Result<Vec<Interview>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(f)
}

/// Everything a consumer needs to know about a generated data directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub spec: GeneratorSpec,
    pub vocab_size: usize,
    pub feature_dims: BTreeMap<Modality, usize>,
    pub feature_kinds: BTreeMap<Modality, Vec<FeatureKind>>,
}

/// Layout of a data directory: `meta.json`, `split.json`, one
/// `<modality>.jsonl` per modality and, for generated data,
/// `plantings.json`.
#[derive(Clone, Debug)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DataDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus_path(&self, modality: Modality) -> PathBuf {
        self.root.join(format!("{}.jsonl", modality.as_str()))
    }

    pub fn meta_path(&self) -> PathBuf {
        self.root.join("meta.json")
    }

    pub fn split_path(&self) -> PathBuf {
        self.root.join("split.json")
    }

    pub fn plantings_path(&self) -> PathBuf {
        self.root.join("plantings.json")
    }

    pub fn load(&self, modality: Modality) -> Result<Vec<Interview>> {
        load_corpus(&self.corpus_path(modality))
    }

    pub fn meta(&self) -> Result<DatasetMeta> {
        read_json(&self.meta_path())
    }

    pub fn split(&self) -> Result<Split> {
        read_json(&self.split_path())
    }

    pub fn plantings(&self) -> Result<Vec<Planting>> {
        read_json(&self.plantings_path())
    }

    /// Writes every file of a generated corpus. The split is drawn over the
    /// text corpus, which never has missing candidates, using the corpus
    /// seed.
    pub fn write_generated(&self, generated: &GeneratedCorpus) -> Result<Split> {
        let split = split_corpus(generated.corpus(Modality::Text), generated.spec.seed)?;
        self.write_meta(&generated.spec.meta())?;
        self.write_split(&split)?;
        for (modality, corpus) in &generated.corpora {
            save_corpus(&self.corpus_path(*modality), corpus)?;
        }
        write_atomic(&self.plantings_path(), &serde_json::to_vec(&generated.plantings)?)?;
        Ok(split)
    }

    pub fn write_meta(&self, meta: &DatasetMeta) -> Result<()> {
        write_atomic(&self.meta_path(), &serde_json::to_vec_pretty(meta)?)
    }

    pub fn write_split(&self, split: &Split) -> Result<()> {
        write_atomic(&self.split_path(), &serde_json::to_vec_pretty(split)?)
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Label, QaPair};

    fn interview(id: &str) -> Interview {
        Interview {
            candidate_id: id.into(),
            job_tokens: vec![1, 2],
            qa: vec![QaPair {
                q_tokens: vec![3],
                answer: vec![vec![0.25, -1.5], vec![1e-300, 3.0]],
                modality: Modality::Audio,
            }],
            label: Label::Hirable,
            annotations: None,
        }
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = vec![interview("a"), interview("b")];
        save_corpus(&path, &corpus).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), corpus);
    }

    #[test]
    fn truncated_line_reports_its_number() {
        let good = serde_json::to_string(&interview("a")).unwrap();
        let text = format!("{good}\n{}\n", &good[..good.len() / 2]);
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_answer_is_a_validation_error_naming_the_candidate() {
        let mut bad = interview("cand-7");
        bad.qa[0].answer.clear();
        let text = serde_json::to_string(&bad).unwrap();
        let err = read_corpus(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Validation { ref candidate, .. } if candidate == "cand-7"));
    }

    #[test]
    fn negative_length_field_is_rejected() {
        let text = r#"{"candidate_id":"x","job_tokens":[-1],"qa":[],"label":1}"#;
        assert!(matches!(read_corpus(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn generated_directory_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GeneratorSpec {
            candidates: 30,
            ..GeneratorSpec::default()
        };
        let generated = crate::data::generate_corpus(&spec).unwrap();
        let data = DataDir::new(dir.path());
        let split = data.write_generated(&generated).unwrap();
        assert_eq!(data.split().unwrap(), split);
        assert_eq!(data.meta().unwrap(), spec.meta());
        assert_eq!(data.plantings().unwrap(), generated.plantings);
        for m in Modality::ALL {
            assert_eq!(data.load(m).unwrap(), generated.corpus(m));
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let line = serde_json::to_string(&interview("a")).unwrap();
        let text = format!("{line}\n{line}\n");
        assert!(matches!(read_corpus(text.as_bytes()), Err(Error::Validation { .. })));
    }
}
