use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::CiteLabel;
use crate::error::{Error, Result};
use crate::ingest::AzCategory;
use crate::metrics::{confusion, recall_delta, MetricsReport, PairKey, RecallDelta};
use crate::model::Prediction;

pub const POSITIVE: &str = "Positive";
pub const NEGATIVE: &str = "Negative";

/// Metrics recomputable from one prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Classes [`POSITIVE`] and [`NEGATIVE`] over every scored pair.
    pub recommendation: MetricsReport,
    /// Over the four specific categories, one vote per query; absent for
    /// predictions without a zoning head.
    pub zoning: Option<MetricsReport>,
    pub zoning_accuracy: Option<f64>,
    pub pairs: usize,
    pub zoning_queries: usize,
}

fn cite_name(l: &CiteLabel) -> String {
    match l {
        CiteLabel::Cite => POSITIVE.into(),
        CiteLabel::NotCite => NEGATIVE.into(),
    }
}

/// Recommendation metrics over all pairs and zoning metrics over the
/// queries whose true category is specific.
pub fn evaluate_predictions(preds: &[Prediction]) -> Result<Evaluation> {
    if preds.is_empty() {
        return Err(Error::Empty("prediction set"));
    }
    let truth: Vec<CiteLabel> = preds.iter().map(|p| p.cite_label).collect();
    let decided: Vec<CiteLabel> = preds.iter().map(|p| p.decision).collect();
    let recommendation =
        confusion(&truth, &decided, &[CiteLabel::Cite, CiteLabel::NotCite])?.report(cite_name)?;

    let (zoning, zoning_accuracy, zoning_queries) = if preds.iter().all(|p| p.az_pred.is_some()) {
        let mut per_query: BTreeMap<&str, (AzCategory, AzCategory)> = BTreeMap::new();
        for p in preds.iter().filter(|p| p.az_label.is_specific()) {
            per_query
                .entry(p.query_id.as_str())
                .or_insert((p.az_label, p.az_pred.expect("checked above")));
        }
        if per_query.is_empty() {
            (None, None, 0)
        } else {
            let (t, p): (Vec<AzCategory>, Vec<AzCategory>) = per_query.values().copied().unzip();
            let c = confusion(&t, &p, &AzCategory::ALL)?;
            let report = c.report_for(&AzCategory::SPECIFIC, |c| c.name().to_string())?;
            let correct = t.iter().zip(&p).filter(|(a, b)| a == b).count();
            (Some(report), Some(correct as f64 / t.len() as f64), t.len())
        }
    } else {
        (None, None, 0)
    };

    Ok(Evaluation {
        recommendation,
        zoning,
        zoning_accuracy,
        pairs: preds.len(),
        zoning_queries,
    })
}

/// Cite decision per `(query_id, candidate_id)`.
pub fn decision_map(preds: &[Prediction]) -> BTreeMap<PairKey, bool> {
    preds
        .iter()
        .map(|p| ((p.query_id.clone(), p.candidate_id.clone()), p.decision.is_cite()))
        .collect()
}

/// True citations among the scored pairs.
pub fn truth_set(preds: &[Prediction]) -> BTreeSet<PairKey> {
    preds
        .iter()
        .filter(|p| p.cite_label.is_cite())
        .map(|p| (p.query_id.clone(), p.candidate_id.clone()))
        .collect()
}

pub fn query_labels(preds: &[Prediction]) -> BTreeMap<String, AzCategory> {
    preds.iter().map(|p| (p.query_id.clone(), p.az_label)).collect()
}

/// True citations recommended by only `a` or only `b`, by query category.
pub fn compare_predictions(a: &[Prediction], b: &[Prediction]) -> Result<RecallDelta> {
    let mut truths = truth_set(a);
    truths.extend(truth_set(b));
    let mut labels = query_labels(b);
    labels.extend(query_labels(a));
    recall_delta(&decision_map(a), &decision_map(b), &truths, &labels)
}
