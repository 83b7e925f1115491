//! Query/candidate examples: TF-IDF similarity, 5:2:3 stratified negatives
//! at a 1:5 ratio, and query-level train/test splits.

mod sampling;
mod split;
mod tfidf;

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use sampling::{
    allocate_strata, assemble_dataset, rank_candidates, sample_negatives, sample_negatives_with_strata,
    stratified_ranks, Assembled, NegativeSpec, StrataRanks, StrataWeights,
};
pub use split::{split_train_test, DatasetSplit, TestSize};
pub use tfidf::{paper_text, similarity, SparseVector, TfIdfIndex};

use crate::error::{Error, Result};
use crate::ingest::AzCategory;

pub const SIMILARITY_NAME: &str = "tfidf-cosine";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiteLabel {
    Cite,
    NotCite,
}

impl CiteLabel {
    /// Index into a `(cite, not_cite)` probability pair.
    pub fn index(self) -> usize {
        match self {
            CiteLabel::Cite => 0,
            CiteLabel::NotCite => 1,
        }
    }

    pub fn one_hot(self) -> [f64; 2] {
        let mut v = [0.0; 2];
        v[self.index()] = 1.0;
        v
    }

    pub fn is_cite(self) -> bool {
        self == CiteLabel::Cite
    }
}

/// One (query, candidate) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub query_id: String,
    pub candidate_id: String,
    pub cite_label: CiteLabel,
    pub az_label: AzCategory,
}

/// Settings and counts recorded next to a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub ratio: usize,
    pub strata_weights: StrataWeights,
    pub similarity: String,
    pub queries: usize,
    pub examples: usize,
    pub positives: usize,
    pub negatives: usize,
    pub skipped_citations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_size: Option<TestSize>,
    #[serde(default)]
    pub train_examples: usize,
    #[serde(default)]
    pub test_examples: usize,
}

impl DatasetManifest {
    pub fn new(spec: &NegativeSpec, assembled: &Assembled) -> Self {
        let positives = assembled.examples.iter().filter(|e| e.cite_label.is_cite()).count();
        DatasetManifest {
            seed: spec.seed,
            ratio: spec.ratio,
            strata_weights: spec.strata,
            similarity: SIMILARITY_NAME.to_string(),
            queries: assembled.queries,
            examples: assembled.examples.len(),
            positives,
            negatives: assembled.examples.len() - positives,
            skipped_citations: assembled.skipped_citations,
            test_size: None,
            train_examples: assembled.examples.len(),
            test_examples: 0,
        }
    }

    pub fn with_split(mut self, split: &DatasetSplit) -> Self {
        self.test_size = split.test_size;
        self.train_examples = split.train.len();
        self.test_examples = split.test.len();
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One JSON object per line.
pub fn write_examples(path: &Path, examples: &[Example]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in examples {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_examples(path: &Path) -> Result<Vec<Example>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_json_shape() {
        let e = Example {
            query_id: "q".into(),
            candidate_id: "c".into(),
            cite_label: CiteLabel::NotCite,
            az_label: AzCategory::Goal,
        };
        assert_eq!(
            serde_json::to_string(&e).unwrap(),
            r#"{"query_id":"q","candidate_id":"c","cite_label":"not_cite","az_label":"Goal"}"#
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_examples(&path, &[e.clone(), e.clone()]).unwrap();
        assert_eq!(read_examples(&path).unwrap(), vec![e.clone(), e]);
    }
}
