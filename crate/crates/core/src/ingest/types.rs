use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Argumentative category of a citing sentence.
///
/// The order of the variants is the tie-break order for predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AzCategory {
    Method,
    Conclusion,
    Goal,
    Object,
    Other,
}

impl AzCategory {
    pub const ALL: [AzCategory; 5] = [
        AzCategory::Method,
        AzCategory::Conclusion,
        AzCategory::Goal,
        AzCategory::Object,
        AzCategory::Other,
    ];

    /// The four categories that carry argumentative information.
    pub const SPECIFIC: [AzCategory; 4] = [
        AzCategory::Method,
        AzCategory::Conclusion,
        AzCategory::Goal,
        AzCategory::Object,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_specific(self) -> bool {
        self != AzCategory::Other
    }

    pub fn name(self) -> &'static str {
        match self {
            AzCategory::Method => "Method",
            AzCategory::Conclusion => "Conclusion",
            AzCategory::Goal => "Goal",
            AzCategory::Object => "Object",
            AzCategory::Other => "Other",
        }
    }

    /// One-hot target vector.
    pub fn one_hot(self) -> [f64; 5] {
        let mut v = [0.0; 5];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for AzCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AzCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::Label(t.to_string()))
    }
}

/// A candidate or citing document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub paper_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub body_paragraphs: Vec<String>,
    pub pub_year: Option<i32>,
    #[serde(default)]
    pub reference_ids: BTreeSet<String>,
}

impl Paper {
    pub fn new(paper_id: impl Into<String>) -> Self {
        Paper {
            paper_id: paper_id.into(),
            title: String::new(),
            abstract_text: String::new(),
            body_paragraphs: Vec::new(),
            pub_year: None,
            reference_ids: BTreeSet::new(),
        }
    }

    /// Drops body paragraphs that can never be used as the abstract fallback.
    pub fn compact(mut self) -> Self {
        if !self.abstract_text.trim().is_empty() {
            self.body_paragraphs.clear();
        } else {
            self.body_paragraphs.truncate(1);
        }
        self
    }

    /// True when [`resolve_abstract`] would succeed.
    pub fn has_text(&self) -> bool {
        resolve_abstract(self).is_ok()
    }
}

/// The abstract when present, otherwise the first body paragraph.
pub fn resolve_abstract(paper: &Paper) -> Result<&str> {
    if !paper.abstract_text.trim().is_empty() {
        return Ok(&paper.abstract_text);
    }
    paper
        .body_paragraphs
        .iter()
        .find(|p| !p.trim().is_empty())
        .map(String::as_str)
        .ok_or_else(|| Error::MissingText(paper.paper_id.clone()))
}

/// A citing sentence with its citation marks replaced by `[CITE]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    /// Paper the sentence was taken from; excluded from its candidate pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citing_id: Option<String>,
    pub cited_id: String,
    pub text: String,
    #[serde(default)]
    pub context: String,
    pub az_label: AzCategory,
}

/// Publication-year buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimeSlice {
    Pre1995,
    Y1996To2000,
    Y2001To2003,
    Y2004To2005,
    Y2006To2007,
    Y2008To2009,
    Y2010To2013,
}

/// Inclusive corpus year range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearBounds {
    pub first: i32,
    pub last: i32,
}

impl Default for YearBounds {
    fn default() -> Self {
        YearBounds {
            first: 1877,
            last: 2013,
        }
    }
}

impl TimeSlice {
    pub const ALL: [TimeSlice; 7] = [
        TimeSlice::Pre1995,
        TimeSlice::Y1996To2000,
        TimeSlice::Y2001To2003,
        TimeSlice::Y2004To2005,
        TimeSlice::Y2006To2007,
        TimeSlice::Y2008To2009,
        TimeSlice::Y2010To2013,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TimeSlice::Pre1995 => "Pre-1995",
            TimeSlice::Y1996To2000 => "1996-2000",
            TimeSlice::Y2001To2003 => "2001-2003",
            TimeSlice::Y2004To2005 => "2004-2005",
            TimeSlice::Y2006To2007 => "2006-2007",
            TimeSlice::Y2008To2009 => "2008-2009",
            TimeSlice::Y2010To2013 => "2010-2013",
        }
    }

    /// Inclusive year range under the given corpus bounds. `Pre1995`
    /// includes 1995 itself.
    pub fn year_range(self, bounds: YearBounds) -> (i32, i32) {
        match self {
            TimeSlice::Pre1995 => (bounds.first, 1995),
            TimeSlice::Y1996To2000 => (1996, 2000),
            TimeSlice::Y2001To2003 => (2001, 2003),
            TimeSlice::Y2004To2005 => (2004, 2005),
            TimeSlice::Y2006To2007 => (2006, 2007),
            TimeSlice::Y2008To2009 => (2008, 2009),
            TimeSlice::Y2010To2013 => (2010, bounds.last),
        }
    }
}

impl fmt::Display for TimeSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn assign_time_slice(year: i32) -> Result<TimeSlice> {
    assign_time_slice_within(year, YearBounds::default())
}

pub fn assign_time_slice_within(year: i32, bounds: YearBounds) -> Result<TimeSlice> {
    if year < bounds.first || year > bounds.last {
        return Err(Error::YearOutOfRange {
            year,
            lo: bounds.first,
            hi: bounds.last,
        });
    }
    Ok(match year {
        ..=1995 => TimeSlice::Pre1995,
        1996..=2000 => TimeSlice::Y1996To2000,
        2001..=2003 => TimeSlice::Y2001To2003,
        2004..=2005 => TimeSlice::Y2004To2005,
        2006..=2007 => TimeSlice::Y2006To2007,
        2008..=2009 => TimeSlice::Y2008To2009,
        _ => TimeSlice::Y2010To2013,
    })
}
