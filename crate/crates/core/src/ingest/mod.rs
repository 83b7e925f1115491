//! Corpus ingestion: JATS parsing, `[CITE]` masking, time slices and
//! token encoding.

mod corpus;
mod jats;
mod text;
mod types;

pub use corpus::{filter_source_papers, filter_source_papers_with, read_labels, Corpus, IngestStats, SourceFilter};
pub use jats::{
    mask_citations, mask_citations_with, parse_jats, split_sentences, MarkerPatterns, ParsedArticle, Reference,
    CITE_TOKEN,
};
pub use text::{tokenize, tokenize_encode, Encoded, Vocabulary, CITE, OOV, PAD};
pub use types::{
    assign_time_slice, assign_time_slice_within, resolve_abstract, AzCategory, Paper, Query, TimeSlice, YearBounds,
};
