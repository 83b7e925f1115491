//! Precision, recall, F1, macro averages, Cohen's kappa and recall deltas,
//! plus the table renderers used by reports.
//!
//! Every zero denominator yields 0 rather than an error.

mod classify;
mod delta;
mod kappa;
pub mod report;

pub use classify::{confusion, macro_average, prf, ClassCounts, Confusion, MetricsReport, Prf};
pub use delta::{recall_delta, PairKey, RecallDelta};
pub use kappa::{cohen_kappa, AgreementTable};
