use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Example;
use crate::error::{Error, Result};

/// How the requested test size is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "unit", content = "count", rename_all = "lowercase")]
pub enum TestSize {
    /// This many whole queries.
    Queries(usize),
    /// Whole queries until at least this many examples are held out.
    Examples(usize),
}

impl Default for TestSize {
    fn default() -> Self {
        TestSize::Examples(5000)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Example>,
    pub test: Vec<Example>,
    pub test_size: Option<TestSize>,
}

impl DatasetSplit {
    pub fn test_queries(&self) -> BTreeSet<&str> {
        self.test.iter().map(|e| e.query_id.as_str()).collect()
    }

    pub fn train_queries(&self) -> BTreeSet<&str> {
        self.train.iter().map(|e| e.query_id.as_str()).collect()
    }
}

/// Holds out whole queries with a specific category, chosen by a seeded
/// shuffle of the sorted eligible query ids. Example order is preserved on
/// both sides.
pub fn split_train_test(dataset: &[Example], size: TestSize, seed: u64) -> Result<DatasetSplit> {
    let mut per_query: BTreeMap<&str, usize> = BTreeMap::new();
    for e in dataset.iter().filter(|e| e.az_label.is_specific()) {
        *per_query.entry(e.query_id.as_str()).or_default() += 1;
    }
    let mut eligible: Vec<&str> = per_query.keys().copied().collect();
    let available_examples: usize = per_query.values().sum();
    match size {
        TestSize::Queries(n) if n > eligible.len() => {
            return Err(Error::InsufficientQueries {
                requested: n,
                available: eligible.len(),
            })
        }
        TestSize::Examples(n) if n > available_examples => {
            return Err(Error::InsufficientQueries {
                requested: n,
                available: available_examples,
            })
        }
        _ => {}
    }
    eligible.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut chosen = BTreeSet::new();
    let mut held = 0;
    for q in eligible {
        let done = match size {
            TestSize::Queries(n) => chosen.len() >= n,
            TestSize::Examples(n) => held >= n,
        };
        if done {
            break;
        }
        chosen.insert(q);
        held += per_query[q];
    }

    let (test, train) = dataset
        .iter()
        .cloned()
        .partition(|e| chosen.contains(e.query_id.as_str()));
    Ok(DatasetSplit {
        train,
        test,
        test_size: Some(size),
    })
}
