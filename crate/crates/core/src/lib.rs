//! Citation recommendation with argumentative zoning of citing sentences.
//!
//! The crate covers the whole pipeline:
//!
//! - [`ingest`]: JATS parsing, `[CITE]` masking, tokenisation, time slices
//! - [`dataset`]: TF-IDF similarity, 5:2:3 stratified negatives, query-level splits
//! - [`ndnet`]: a small reverse-mode differentiation core with BiLSTM,
//!   attention pooling, Adam and gradient checking
//! - [`model`]: the joint recommender/zoning network and its single-task baseline
//! - [`metrics`]: precision/recall/F1, macro averages, Cohen's kappa, recall deltas
//! - [`harness`]: experiment orchestration and report rendering
//! - [`synth`]: synthetic corpora with planted zoning and topic signals

pub mod dataset;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod ndnet;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/dataset.md")]
    mod dataset {}
    #[doc = include_str!("../../../book/src/ndnet.md")]
    mod ndnet {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
}
