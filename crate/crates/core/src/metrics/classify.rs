use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64, f1: f64) -> Self {
        Prf { precision, recall, f1 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.precision, self.recall, self.f1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// Only meaningful in the binary case.
    pub tn: u64,
}

impl ClassCounts {
    pub fn prf(&self) -> Prf {
        prf(self.tp, self.fp, self.fn_)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `P = TP/(TP+FP)`, `R = TP/(TP+FN)`, `F1 = 2PR/(P+R)`; any zero denominator gives 0.
///
/// ```
/// use citeaz::metrics::prf;
///
/// let m = prf(30, 10, 90);
/// assert_eq!((m.precision, m.recall, m.f1), (0.75, 0.25, 0.375));
/// assert_eq!(prf(0, 5, 5).f1, 0.0);
/// ```
pub fn prf(tp: u64, fp: u64, fn_: u64) -> Prf {
    let p = ratio(tp as f64, (tp + fp) as f64);
    let r = ratio(tp as f64, (tp + fn_) as f64);
    Prf::new(p, r, ratio(2.0 * p * r, p + r))
}

/// Unweighted means of per-class values. Macro F1 is the mean of the
/// per-class F1 values, not the F1 of the macro precision and recall.
pub fn macro_average(per_class: &[Prf]) -> Result<Prf> {
    if per_class.is_empty() {
        return Err(Error::Empty("macro average over no classes"));
    }
    let n = per_class.len() as f64;
    let sum = |f: fn(&Prf) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    Ok(Prf::new(sum(|m| m.precision), sum(|m| m.recall), sum(|m| m.f1)))
}

/// Per-class and macro results over one class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    pub per_class: Vec<Prf>,
    pub macro_avg: Prf,
}

impl MetricsReport {
    pub fn from_counts(classes: Vec<String>, counts: &[ClassCounts]) -> Result<Self> {
        let per_class: Vec<Prf> = counts.iter().map(ClassCounts::prf).collect();
        let macro_avg = macro_average(&per_class)?;
        Ok(MetricsReport {
            classes,
            per_class,
            macro_avg,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, name: &str) -> Option<Prf> {
        self.classes.iter().position(|c| c == name).map(|i| self.per_class[i])
    }
}

/// Square count matrix with rows indexed by the true label and columns by
/// the predicted label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion<L> {
    pub classes: Vec<L>,
    pub matrix: Vec<Vec<u64>>,
}

impl<L: PartialEq + Clone + std::fmt::Debug> Confusion<L> {
    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    /// TP/FP/FN/TN per class in class order.
    pub fn counts(&self) -> Vec<ClassCounts> {
        let k = self.classes.len();
        let n = self.total();
        (0..k)
            .map(|c| {
                let tp = self.matrix[c][c];
                let row: u64 = self.matrix[c].iter().sum();
                let col: u64 = (0..k).map(|r| self.matrix[r][c]).sum();
                ClassCounts {
                    tp,
                    fp: col - tp,
                    fn_: row - tp,
                    tn: n + tp - row - col,
                }
            })
            .collect()
    }

    /// Restricts the report to `subset` while still counting predictions of
    /// other classes as misses.
    pub fn report_for(&self, subset: &[L], name: impl Fn(&L) -> String) -> Result<MetricsReport> {
        let counts = self.counts();
        let mut picked = Vec::new();
        for s in subset {
            let i = self
                .classes
                .iter()
                .position(|c| c == s)
                .ok_or_else(|| Error::Label(format!("{s:?}")))?;
            picked.push(counts[i]);
        }
        MetricsReport::from_counts(subset.iter().map(name).collect(), &picked)
    }

    pub fn report(&self, name: impl Fn(&L) -> String) -> Result<MetricsReport> {
        let classes = self.classes.clone();
        self.report_for(&classes, name)
    }
}

/// Tallies `(truth, prediction)` pairs over `class_order`.
pub fn confusion<L: PartialEq + Clone + std::fmt::Debug>(
    truth: &[L],
    predicted: &[L],
    class_order: &[L],
) -> Result<Confusion<L>> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let pos = |l: &L| {
        class_order
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::Label(format!("{l:?}")))
    };
    let k = class_order.len();
    let mut matrix = vec![vec![0u64; k]; k];
    for (t, p) in truth.iter().zip(predicted) {
        matrix[pos(t)?][pos(p)?] += 1;
    }
    Ok(Confusion {
        classes: class_order.to_vec(),
        matrix,
    })
}
