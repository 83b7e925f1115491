use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tfidf::{paper_text, TfIdfIndex};
use super::{CiteLabel, Example};
use crate::error::{Error, Result};
use crate::ingest::{Corpus, Paper, Query};

/// Relative sizes of the high, low and median similarity strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataWeights {
    pub high: usize,
    pub low: usize,
    pub median: usize,
}

impl Default for StrataWeights {
    fn default() -> Self {
        StrataWeights {
            high: 5,
            low: 2,
            median: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegativeSpec {
    /// Negatives per positive.
    pub ratio: usize,
    pub strata: StrataWeights,
    pub seed: u64,
}

impl Default for NegativeSpec {
    fn default() -> Self {
        NegativeSpec {
            ratio: 5,
            strata: StrataWeights::default(),
            seed: 0,
        }
    }
}

impl NegativeSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.strata;
        if self.ratio == 0 || s.high == 0 || s.low == 0 || s.median == 0 {
            return Err(Error::Config("negative ratio and strata weights must be positive".into()));
        }
        Ok(())
    }
}

/// Splits `total` by largest remainder over `weights`; remainder ties go to
/// high, then low, then median.
///
/// ```
/// use citeaz::dataset::{allocate_strata, StrataWeights};
///
/// let w = StrataWeights::default();
/// assert_eq!(allocate_strata(10, w), (5, 2, 3));
/// assert_eq!(allocate_strata(5, w), (3, 1, 1));
/// ```
pub fn allocate_strata(total: usize, weights: StrataWeights) -> (usize, usize, usize) {
    let w = [weights.high, weights.low, weights.median];
    let sum: usize = w.iter().sum();
    if sum == 0 {
        return (total, 0, 0);
    }
    // quota_i = total·w_i/sum; compare remainders exactly as integers mod sum
    let mut alloc = w.map(|wi| total * wi / sum);
    let rems = w.map(|wi| total * wi % sum);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    let leftover = total - alloc.iter().sum::<usize>();
    for &i in order.iter().take(leftover) {
        alloc[i] += 1;
    }
    (alloc[0], alloc[1], alloc[2])
}

/// 0-based ranks chosen from each stratum of a list of `n` ranked candidates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StrataRanks {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    pub median: Vec<usize>,
}

impl StrataRanks {
    pub fn all(&self) -> impl Iterator<Item = usize> + '_ {
        self.high.iter().chain(&self.low).chain(&self.median).copied()
    }
}

/// Head, tail and a median window. The window starts at 1-based rank
/// `⌊n/2⌋` and alternates outward (`+1, −1, +2, …`), skipping ranks already
/// taken by the head or tail.
pub fn stratified_ranks(n: usize, (n_high, n_low, n_median): (usize, usize, usize)) -> Result<StrataRanks> {
    let needed = n_high + n_low + n_median;
    if needed > n {
        return Err(Error::Shortage {
            query_id: String::new(),
            needed,
            available: n,
        });
    }
    let high: Vec<usize> = (0..n_high).collect();
    let low: Vec<usize> = (n - n_low..n).collect();
    let taken: BTreeSet<usize> = high.iter().chain(&low).copied().collect();
    let center = (n / 2).max(1) - 1;
    let mut median = Vec::with_capacity(n_median);
    let mut step = 0usize;
    while median.len() < n_median {
        let candidate = if step == 0 {
            Some(center)
        } else if step % 2 == 1 {
            Some(center + step.div_ceil(2))
        } else {
            center.checked_sub(step / 2)
        };
        step += 1;
        if let Some(r) = candidate.filter(|r| *r < n && !taken.contains(r)) {
            median.push(r);
        }
    }
    Ok(StrataRanks { high, low, median })
}

/// Candidates ranked by similarity descending, paper id ascending.
pub fn rank_candidates<'a>(query: &Query, candidates: &[&'a Paper], index: &TfIdfIndex) -> Vec<(&'a Paper, f64)> {
    let q = index.vectorize(&query.text);
    let mut scored: Vec<(&Paper, f64)> = candidates
        .iter()
        .map(|p| {
            let s = match index.document(&p.paper_id) {
                Some(d) => q.cosine(d),
                None => q.cosine(&index.vectorize(&paper_text(p))),
            };
            (*p, s)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.paper_id.cmp(&b.0.paper_id)));
    scored
}

/// Exactly `ratio · k` not-cite examples for `query`, drawn from the high,
/// low and median similarity strata of `candidates`.
///
/// The selection is a pure function of the ranking; `spec.seed` is recorded
/// but does not influence it.
pub fn sample_negatives(
    query: &Query,
    candidates: &[&Paper],
    k: usize,
    spec: &NegativeSpec,
    index: &TfIdfIndex,
) -> Result<Vec<Example>> {
    Ok(sample_negatives_with_strata(query, candidates, k, spec, index)?.0)
}

/// [`sample_negatives`] together with the chosen ranks.
pub fn sample_negatives_with_strata(
    query: &Query,
    candidates: &[&Paper],
    k: usize,
    spec: &NegativeSpec,
    index: &TfIdfIndex,
) -> Result<(Vec<Example>, StrataRanks)> {
    spec.validate()?;
    let total = spec.ratio * k;
    if total == 0 {
        return Ok((Vec::new(), StrataRanks::default()));
    }
    let ranked = rank_candidates(query, candidates, index);
    let ranks = stratified_ranks(ranked.len(), allocate_strata(total, spec.strata)).map_err(|e| match e {
        Error::Shortage { needed, available, .. } => Error::Shortage {
            query_id: query.query_id.clone(),
            needed,
            available,
        },
        other => other,
    })?;
    let examples = ranks
        .all()
        .map(|r| Example {
            query_id: query.query_id.clone(),
            candidate_id: ranked[r].0.paper_id.clone(),
            cite_label: CiteLabel::NotCite,
            az_label: query.az_label,
        })
        .collect();
    Ok((examples, ranks))
}

/// Examples plus the number of citations that could not be resolved.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assembled {
    pub examples: Vec<Example>,
    pub skipped_citations: usize,
    pub queries: usize,
}

/// Positive examples for every resolvable citation plus stratified negatives.
///
/// Query records sharing a `query_id` form one query whose cited set is the
/// union of their `cited_id`s. A citation resolves when the corpus holds the
/// cited paper with usable text. The candidate pool is every paper with text
/// except the citing paper and the cited set; IDF is computed once over all
/// papers with text. Output is ordered by `query_id`.
pub fn assemble_dataset(queries: &[Query], corpus: &Corpus, spec: &NegativeSpec) -> Result<Assembled> {
    spec.validate()?;
    let pool: Vec<&Paper> = corpus.papers.values().filter(|p| p.has_text()).collect();
    let index = TfIdfIndex::from_papers(pool.iter().copied());

    let mut groups: BTreeMap<&str, Vec<&Query>> = BTreeMap::new();
    for q in queries {
        groups.entry(q.query_id.as_str()).or_default().push(q);
    }

    let per_query: Vec<Result<(Vec<Example>, usize)>> = groups
        .par_iter()
        .map(|(_, records)| {
            let head = records[0];
            let mut cited = BTreeSet::new();
            let mut skipped = 0;
            for q in records {
                match corpus.papers.get(&q.cited_id) {
                    Some(p) if p.has_text() => {
                        cited.insert(q.cited_id.as_str());
                    }
                    _ => skipped += 1,
                }
            }
            let mut out: Vec<Example> = cited
                .iter()
                .map(|id| Example {
                    query_id: head.query_id.clone(),
                    candidate_id: id.to_string(),
                    cite_label: CiteLabel::Cite,
                    az_label: head.az_label,
                })
                .collect();
            let candidates: Vec<&Paper> = pool
                .iter()
                .copied()
                .filter(|p| !cited.contains(p.paper_id.as_str()) && Some(&p.paper_id) != head.citing_id.as_ref())
                .collect();
            out.extend(sample_negatives(head, &candidates, cited.len(), spec, &index)?);
            Ok((out, skipped))
        })
        .collect();

    let mut assembled = Assembled::default();
    for r in per_query {
        let (examples, skipped) = r?;
        if !examples.is_empty() {
            assembled.queries += 1;
        }
        assembled.examples.extend(examples);
        assembled.skipped_citations += skipped;
    }
    Ok(assembled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AzCategory;
    use proptest::prelude::*;

    fn query(id: &str, cited: &str) -> Query {
        Query {
            query_id: id.into(),
            citing_id: Some("citing".into()),
            cited_id: cited.into(),
            text: "alpha beta [CITE]".into(),
            context: String::new(),
            az_label: AzCategory::Method,
        }
    }

    #[test]
    fn allocation_examples() {
        let w = StrataWeights::default();
        assert_eq!(allocate_strata(10, w), (5, 2, 3));
        assert_eq!(allocate_strata(0, w), (0, 0, 0));
        // quotas (2.5, 1.0, 1.5): floors (2, 1, 1), leftover to high by tie order
        assert_eq!(allocate_strata(5, w), (3, 1, 1));
    }

    #[test]
    fn hundred_candidates_k2() {
        let ranks = stratified_ranks(100, allocate_strata(10, StrataWeights::default())).unwrap();
        let one_based = |v: &[usize]| v.iter().map(|r| r + 1).collect::<Vec<_>>();
        assert_eq!(one_based(&ranks.high), vec![1, 2, 3, 4, 5]);
        assert_eq!(one_based(&ranks.low), vec![99, 100]);
        let mut median = one_based(&ranks.median);
        median.sort();
        assert_eq!(median, vec![49, 50, 51]);
    }

    /// Brute-force oracle: scores are distinct, so ranking is a plain sort.
    #[test]
    fn sample_negatives_on_distinct_scores() {
        let mut papers = Vec::new();
        for i in 0..100 {
            let mut p = Paper::new(format!("c{i:03}"));
            // i copies of "alpha" make similarity strictly increase with i
            p.title = std::iter::repeat("alpha").take(i + 1).collect::<Vec<_>>().join(" ");
            p.abstract_text = format!("filler{i} beta");
            papers.push(p);
        }
        let refs: Vec<&Paper> = papers.iter().collect();
        let index = TfIdfIndex::from_papers(refs.iter().copied());
        let q = query("q", "x");
        let scores: Vec<f64> = refs
            .iter()
            .map(|p| index.vectorize(&q.text).cosine(index.document(&p.paper_id).unwrap()))
            .collect();
        let mut order: Vec<usize> = (0..100).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        let distinct: BTreeSet<u64> = scores.iter().map(|s| s.to_bits()).collect();
        assert_eq!(distinct.len(), 100);
        let expected: BTreeSet<String> = [1, 2, 3, 4, 5, 99, 100, 49, 50, 51]
            .iter()
            .map(|r| papers[order[r - 1]].paper_id.clone())
            .collect();

        let spec = NegativeSpec::default();
        let got = sample_negatives(&q, &refs, 2, &spec, &index).unwrap();
        assert_eq!(got.len(), 10);
        let ids: BTreeSet<String> = got.iter().map(|e| e.candidate_id.clone()).collect();
        assert_eq!(ids, expected);
        assert!(got.iter().all(|e| e.cite_label == CiteLabel::NotCite));
        assert_eq!(sample_negatives(&q, &refs, 2, &spec, &index).unwrap(), got);
        assert!(sample_negatives(&q, &refs, 0, &spec, &index).unwrap().is_empty());
    }

    #[test]
    fn ties_break_by_paper_id() {
        let mut a = Paper::new("b-paper");
        a.title = "same".into();
        let mut b = Paper::new("a-paper");
        b.title = "same".into();
        let index = TfIdfIndex::from_papers([&a, &b]);
        let ranked = rank_candidates(&query("q", "x"), &[&a, &b], &index);
        assert_eq!(ranked[0].0.paper_id, "a-paper");
        assert_eq!(ranked[1].0.paper_id, "b-paper");
    }

    #[test]
    fn shortage_names_the_query() {
        let p = Paper::new("only");
        let index = TfIdfIndex::from_papers([&p]);
        match sample_negatives(&query("q7", "x"), &[&p], 1, &NegativeSpec::default(), &index) {
            Err(Error::Shortage {
                query_id,
                needed: 5,
                available: 1,
            }) => assert_eq!(query_id, "q7"),
            other => panic!("{other:?}"),
        }
    }

    fn small_corpus(n: usize) -> Corpus {
        let mut corpus = Corpus::default();
        for i in 0..n {
            let mut p = Paper::new(format!("p{i:02}"));
            p.title = format!("topic{} word{}", i % 3, i);
            p.abstract_text = format!("abstract {i}");
            corpus.insert_paper(p);
        }
        corpus
    }

    #[test]
    fn one_query_one_citation_gives_six() {
        let corpus = small_corpus(12);
        let a = assemble_dataset(&[query("q", "p03")], &corpus, &NegativeSpec::default()).unwrap();
        assert_eq!(a.examples.len(), 6);
        assert_eq!(a.examples[0].cite_label, CiteLabel::Cite);
        assert_eq!(a.examples.iter().filter(|e| e.cite_label == CiteLabel::Cite).count(), 1);
        assert!(assemble_dataset(&[], &corpus, &NegativeSpec::default()).unwrap().examples.is_empty());
    }

    #[test]
    fn unresolvable_citations_are_tallied() {
        let corpus = small_corpus(12);
        let a = assemble_dataset(
            &[query("q", "p01"), query("q", "missing")],
            &corpus,
            &NegativeSpec::default(),
        )
        .unwrap();
        assert_eq!(a.skipped_citations, 1);
        assert_eq!(a.examples.len(), 6);
    }

    proptest! {
        #[test]
        fn strata_law(total in 0usize..500) {
            let (h, l, m) = allocate_strata(total, StrataWeights::default());
            prop_assert_eq!(h + l + m, total);
            for (got, w) in [(h, 5.0), (l, 2.0), (m, 3.0)] {
                prop_assert!((got as f64 - total as f64 * w / 10.0).abs() <= 1.0);
            }
        }

        #[test]
        fn count_and_disjointness_laws(k in 1usize..4, seed in 0u64..4) {
            let corpus = small_corpus(40);
            let cited: Vec<String> = (0..k).map(|i| format!("p{:02}", 7 * i + seed as usize)).collect();
            let queries: Vec<Query> = cited.iter().map(|c| query("q", c)).collect();
            let spec = NegativeSpec { seed, ..NegativeSpec::default() };
            let a = assemble_dataset(&queries, &corpus, &spec).unwrap();
            let pos: BTreeSet<&str> = a.examples.iter().filter(|e| e.cite_label == CiteLabel::Cite).map(|e| e.candidate_id.as_str()).collect();
            let neg: Vec<&str> = a.examples.iter().filter(|e| e.cite_label == CiteLabel::NotCite).map(|e| e.candidate_id.as_str()).collect();
            prop_assert_eq!(pos.len(), k);
            prop_assert_eq!(neg.len(), 5 * k);
            let neg_set: BTreeSet<&str> = neg.iter().copied().collect();
            prop_assert_eq!(neg_set.len(), neg.len());
            prop_assert!(neg_set.is_disjoint(&pos));
            prop_assert_eq!(assemble_dataset(&queries, &corpus, &spec).unwrap(), a);
        }
    }
}
