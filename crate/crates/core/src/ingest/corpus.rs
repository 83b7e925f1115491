//! Corpus assembly, filtering and line-oriented file formats.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jats::{parse_jats, ParsedArticle};
use super::types::{assign_time_slice_within, AzCategory, Paper, Query, YearBounds};
use crate::error::{Error, Result};

/// Thresholds for keeping a citing paper. Both comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceFilter {
    /// Keep papers with more than this many references.
    pub min_references: usize,
    /// Keep papers whose dated references fall in more than this many slices.
    pub min_slices: usize,
    pub bounds: YearBounds,
}

impl Default for SourceFilter {
    fn default() -> Self {
        SourceFilter {
            min_references: 30,
            min_slices: 5,
            bounds: YearBounds::default(),
        }
    }
}

/// Papers with more than 30 references spread over more than 5 time slices.
pub fn filter_source_papers(corpus: &[Paper]) -> Vec<Paper> {
    filter_source_papers_with(corpus, &SourceFilter::default())
}

/// Unresolvable or undated references count toward the reference total but
/// not toward the slice span.
pub fn filter_source_papers_with(corpus: &[Paper], filter: &SourceFilter) -> Vec<Paper> {
    let years: HashMap<&str, Option<i32>> = corpus.iter().map(|p| (p.paper_id.as_str(), p.pub_year)).collect();
    corpus
        .iter()
        .filter(|p| {
            if p.reference_ids.len() <= filter.min_references {
                return false;
            }
            let slices: BTreeSet<_> = p
                .reference_ids
                .iter()
                .filter_map(|r| years.get(r.as_str()).copied().flatten())
                .filter_map(|y| assign_time_slice_within(y, filter.bounds).ok())
                .collect();
            slices.len() > filter.min_slices
        })
        .cloned()
        .collect()
}

/// Papers keyed by identifier plus the citing sentences drawn from them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub papers: BTreeMap<String, Paper>,
    pub queries: Vec<Query>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Paper(Paper),
    Query(Query),
}

/// Counts collected while ingesting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub articles: usize,
    pub queries: usize,
    /// Citation markers without a `rid`.
    pub skipped_markers: usize,
}

impl Corpus {
    pub fn paper(&self, id: &str) -> Result<&Paper> {
        self.papers
            .get(id)
            .ok_or_else(|| Error::Lookup(format!("paper `{id}`")))
    }

    /// Inserts `paper`, keeping whichever record carries more text.
    /// Missing title or year on the kept record is filled from the other.
    pub fn insert_paper(&mut self, paper: Paper) {
        match self.papers.get_mut(&paper.paper_id) {
            None => {
                self.papers.insert(paper.paper_id.clone(), paper);
            }
            Some(existing) => {
                let mut incoming = paper;
                if !existing.has_text() && incoming.has_text() {
                    std::mem::swap(existing, &mut incoming);
                }
                if existing.title.is_empty() {
                    existing.title = incoming.title;
                }
                if existing.pub_year.is_none() {
                    existing.pub_year = incoming.pub_year;
                }
                existing.reference_ids.extend(incoming.reference_ids);
            }
        }
    }

    /// Merges parsed articles. Citation `rid`s are resolved to corpus-wide
    /// ids and every reference becomes at least a stub paper. Articles are
    /// merged in ascending paper id order whatever the input order.
    pub fn from_articles(mut articles: Vec<ParsedArticle>) -> (Self, IngestStats) {
        articles.sort_by(|a, b| a.paper.paper_id.cmp(&b.paper.paper_id));
        let mut corpus = Corpus::default();
        let mut stats = IngestStats::default();
        for mut article in articles {
            article.resolve_citations();
            stats.articles += 1;
            stats.skipped_markers += article.warnings;
            for r in &article.references {
                if r.paper_id != article.paper.paper_id {
                    corpus.insert_paper(r.to_paper());
                }
            }
            corpus.insert_paper(article.paper.compact());
            stats.queries += article.queries.len();
            corpus.queries.extend(article.queries);
        }
        (corpus, stats)
    }

    /// Parses every file in parallel.
    pub fn ingest_files(paths: &[PathBuf]) -> Result<(Self, IngestStats)> {
        let articles = paths
            .par_iter()
            .map(|path| {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parse_jats(&text).map_err(|e| match e {
                    Error::Xml { offset, message } => Error::Format {
                        path: path.clone(),
                        line: text[..offset.min(text.len())].lines().count().max(1),
                        message: format!("byte {offset}: {message}"),
                    },
                    other => Error::Format {
                        path: path.clone(),
                        line: 0,
                        message: other.to_string(),
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_articles(articles))
    }

    /// All `.xml` and `.nxml` files below `dir`, sorted.
    pub fn xml_files(dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
                let path = entry.map_err(|e| Error::io(&d, e))?.path();
                if path.is_dir() {
                    stack.push(path);
                } else if matches!(path.extension().and_then(|e| e.to_str()), Some("xml" | "nxml")) {
                    out.push(path);
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Overwrites query labels from `labels`; returns how many were applied.
    pub fn apply_labels(&mut self, labels: &BTreeMap<String, AzCategory>) -> usize {
        let mut applied = 0;
        for q in &mut self.queries {
            if let Some(&label) = labels.get(&q.query_id) {
                q.az_label = label;
                applied += 1;
            }
        }
        applied
    }

    /// One JSON object per line: papers first in id order, then queries.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut put = |r: &Record| -> Result<()> {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))
        };
        for p in self.papers.values() {
            put(&Record::Paper(p.clone()))?;
        }
        for q in &self.queries {
            put(&Record::Query(q.clone()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut corpus = Corpus::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })?;
            match record {
                Record::Paper(p) => corpus.insert_paper(p),
                Record::Query(q) => corpus.queries.push(q),
            }
        }
        Ok(corpus)
    }
}

/// Tab-separated `query_id`, `az_label` lines. A header line whose second
/// column is not a category name is skipped.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, AzCategory>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        if fields.len() < 2 {
            return Err(bad("expected query_id<TAB>az_label".into()));
        }
        match fields[1].parse::<AzCategory>() {
            Ok(label) => {
                labels.insert(fields[0].trim().to_string(), label);
            }
            Err(_) if n == 0 => {}
            Err(e) => return Err(bad(e.to_string())),
        }
    }
    Ok(labels)
}
