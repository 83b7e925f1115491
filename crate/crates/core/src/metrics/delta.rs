use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AzCategory;

/// `(query_id, candidate_id)`.
pub type PairKey = (String, String);

/// True citations recommended by exactly one of two models, per category.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RecallDelta {
    /// `(only A, only B)` indexed by [`AzCategory::index`].
    pub counts: [(u64, u64); 5],
}

impl RecallDelta {
    pub fn get(&self, category: AzCategory) -> (u64, u64) {
        self.counts[category.index()]
    }
}

/// Counts, for each category, true citations that model A recommends and
/// model B does not, and the reverse. Both decision maps must cover the same
/// pairs.
pub fn recall_delta(
    preds_a: &BTreeMap<PairKey, bool>,
    preds_b: &BTreeMap<PairKey, bool>,
    truths: &BTreeSet<PairKey>,
    az_labels: &BTreeMap<String, AzCategory>,
) -> Result<RecallDelta> {
    let missing: Vec<String> = preds_a
        .keys()
        .filter(|k| !preds_b.contains_key(*k))
        .map(|k| format!("{}/{} missing from B", k.0, k.1))
        .chain(
            preds_b
                .keys()
                .filter(|k| !preds_a.contains_key(*k))
                .map(|k| format!("{}/{} missing from A", k.0, k.1)),
        )
        .collect();
    if !missing.is_empty() {
        return Err(Error::Alignment(missing));
    }
    let mut delta = RecallDelta::default();
    for (key, &a) in preds_a {
        if a == preds_b[key] || !truths.contains(key) {
            continue;
        }
        let label = az_labels
            .get(&key.0)
            .ok_or_else(|| Error::Lookup(format!("label for query `{}`", key.0)))?;
        let slot = &mut delta.counts[label.index()];
        if a {
            slot.0 += 1;
        } else {
            slot.1 += 1;
        }
    }
    Ok(delta)
}
