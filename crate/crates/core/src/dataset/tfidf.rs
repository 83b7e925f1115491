use std::collections::{BTreeMap, HashMap};

use crate::ingest::{resolve_abstract, tokenize, Paper, Query, CITE_TOKEN};

/// Sparse L2-normalised term vector, sorted by term id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector(Vec<(usize, f64)>);

impl SparseVector {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Cosine of two normalised vectors, clamped to `[0, 1]`.
    pub fn cosine(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j, mut dot) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        dot.clamp(0.0, 1.0)
    }
}

/// Title plus abstract (or first paragraph) of a candidate.
pub fn paper_text(paper: &Paper) -> String {
    match resolve_abstract(paper) {
        Ok(a) => format!("{} {}", paper.title, a),
        Err(_) => paper.title.clone(),
    }
}

/// Document frequencies over a candidate pool.
///
/// Term weight is `tf · idf` with the smoothed `idf = ln((1 + N)/(1 + df)) + 1`,
/// where `N` is the pool size. Terms absent from the pool have `df = 0`.
#[derive(Debug, Clone, Default)]
pub struct TfIdfIndex {
    terms: HashMap<String, usize>,
    df: Vec<usize>,
    docs: usize,
    vectors: BTreeMap<String, SparseVector>,
}

impl TfIdfIndex {
    /// Indexes `(id, text)` documents.
    pub fn build<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, String)>,
    {
        let mut index = TfIdfIndex::default();
        let mut bags = Vec::new();
        for (id, text) in docs {
            let bag = index.bag(&text);
            for &(term, _) in &bag {
                index.df[term] += 1;
            }
            bags.push((id.to_string(), bag));
            index.docs += 1;
        }
        for (id, bag) in bags {
            let v = index.weigh(bag);
            index.vectors.insert(id, v);
        }
        index
    }

    /// Indexes every paper that has a title or text.
    pub fn from_papers<'a, I: IntoIterator<Item = &'a Paper>>(papers: I) -> Self {
        Self::build(papers.into_iter().map(|p| (p.paper_id.as_str(), paper_text(p))))
    }

    pub fn len(&self) -> usize {
        self.docs
    }

    pub fn is_empty(&self) -> bool {
        self.docs == 0
    }

    fn bag(&mut self, text: &str) -> Vec<(usize, f64)> {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(text).into_iter().filter(|t| t != CITE_TOKEN) {
            let next = self.df.len();
            let id = *self.terms.entry(t).or_insert(next);
            if id == next {
                self.df.push(0);
            }
            *counts.entry(id).or_default() += 1.0;
        }
        counts.into_iter().collect()
    }

    /// Like `bag` but read-only; unseen terms get ids past the vocabulary.
    fn lookup_bag(&self, text: &str) -> Vec<(usize, f64)> {
        let mut unseen: HashMap<String, usize> = HashMap::new();
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokenize(text).into_iter().filter(|t| t != CITE_TOKEN) {
            let id = match self.terms.get(&t) {
                Some(&id) => id,
                None => {
                    let next = self.df.len() + unseen.len();
                    *unseen.entry(t).or_insert(next)
                }
            };
            *counts.entry(id).or_default() += 1.0;
        }
        counts.into_iter().collect()
    }

    fn idf(&self, term: usize) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    fn weigh(&self, bag: Vec<(usize, f64)>) -> SparseVector {
        let mut v: Vec<(usize, f64)> = bag.into_iter().map(|(t, tf)| (t, tf * self.idf(t))).collect();
        let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return SparseVector::default();
        }
        for (_, w) in &mut v {
            *w /= norm;
        }
        v.sort_by_key(|(t, _)| *t);
        SparseVector(v)
    }

    /// Vector for arbitrary text under the pool's statistics.
    pub fn vectorize(&self, text: &str) -> SparseVector {
        self.weigh(self.lookup_bag(text))
    }

    /// Stored vector of an indexed document.
    pub fn document(&self, id: &str) -> Option<&SparseVector> {
        self.vectors.get(id)
    }
}

/// TF-IDF cosine between a query sentence and a candidate's title and abstract.
pub fn similarity(query: &Query, paper: &Paper, index: &TfIdfIndex) -> f64 {
    let q = index.vectorize(&query.text);
    match index.document(&paper.paper_id) {
        Some(d) => q.cosine(d),
        None => q.cosine(&index.vectorize(&paper_text(paper))),
    }
}
