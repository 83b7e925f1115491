//! Tab-separated and Markdown renderings of result tables.

use serde::{Deserialize, Serialize};

use super::classify::Prf;
use super::delta::RecallDelta;
use crate::ingest::AzCategory;

/// A labelled grid; the first column holds row labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Table {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_values(&mut self, label: impl Into<String>, values: impl IntoIterator<Item = f64>) {
        let mut row = vec![label.into()];
        row.extend(values.into_iter().map(|v| format!("{v:.4}")));
        self.rows.push(row);
    }

    pub fn push_counts(&mut self, label: impl Into<String>, values: impl IntoIterator<Item = u64>) {
        let mut row = vec![label.into()];
        row.extend(values.into_iter().map(|v| v.to_string()));
        self.rows.push(row);
    }

    pub fn row_labels(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r[0].as_str()).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
        let mut out = format!("### {}\n\n", self.title);
        out.push_str(&line(&self.header));
        let sep: Vec<String> = self
            .header
            .iter()
            .enumerate()
            .map(|(i, _)| if i == 0 { "---".to_string() } else { "---:".to_string() })
            .collect();
        out.push_str(&line(&sep));
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out
    }

    /// Header and row labels, one per line; values are left out.
    pub fn schema(&self) -> String {
        let mut out = format!("columns: {}\n", self.header.join(" | "));
        for label in self.row_labels() {
            out.push_str(&format!("row: {label}\n"));
        }
        out
    }
}

pub const BASELINE_LABEL: &str = "Single-task model (baseline)";

/// Row label for a model; `None` is the single-task baseline.
pub fn model_label(alpha: Option<f64>) -> String {
    match alpha {
        None => BASELINE_LABEL.to_string(),
        Some(a) => format!("Multi-task model (alpha = {a})"),
    }
}

const MACRO_HEADER: [&str; 4] = ["Model", "Macro_P", "Macro_R", "Macro_F1"];

/// Models as rows, macro precision, recall and F1 as columns.
pub fn recommendation_macro_table(rows: &[(String, Prf)]) -> Table {
    let mut t = Table::new("Macro evaluation metrics of citation recommendation", &MACRO_HEADER);
    for (label, m) in rows {
        t.push_values(label.clone(), m.as_array());
    }
    t
}

/// Positive and negative class metrics per model.
pub fn recommendation_class_table(rows: &[(String, Prf, Prf)]) -> Table {
    let mut t = Table::new(
        "Evaluation metrics of positive and negative samples",
        &["Model", "Positive_P", "Positive_R", "Positive_F1", "Negative_P", "Negative_R", "Negative_F1"],
    );
    for (label, pos, neg) in rows {
        t.push_values(label.clone(), pos.as_array().into_iter().chain(neg.as_array()));
    }
    t
}

pub fn zoning_macro_table(rows: &[(String, Prf)]) -> Table {
    let mut t = Table::new("Macro evaluation metrics of argumentative classification", &MACRO_HEADER);
    for (label, m) in rows {
        t.push_values(label.clone(), m.as_array());
    }
    t
}

/// Per-category metrics; `per_class` follows [`AzCategory::SPECIFIC`].
pub fn zoning_class_table(rows: &[(String, [Prf; 4])]) -> Table {
    let header: Vec<String> = std::iter::once("Model".to_string())
        .chain(
            AzCategory::SPECIFIC
                .iter()
                .flat_map(|c| ["P", "R", "F1"].map(|m| format!("{c}_{m}"))),
        )
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new("Evaluation metrics of different argumentative categories", &header);
    for (label, per_class) in rows {
        t.push_values(label.clone(), per_class.iter().flat_map(Prf::as_array));
    }
    t
}

/// Categories as rows; true citations recalled by only one of the two models.
pub fn recall_delta_table(multi_label: &str, delta: &RecallDelta) -> Table {
    let mut t = Table::new(
        format!("Citations recalled by only one model: {multi_label} vs {BASELINE_LABEL}"),
        &["Category", "Only_multi_task", "Only_single_task"],
    );
    for c in AzCategory::SPECIFIC {
        let (a, b) = delta.get(c);
        t.push_counts(c.name(), [a, b]);
    }
    t
}
