use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-annotator count matrix; entry `[i][j]` counts items that annotator 2
/// labelled `i` and annotator 1 labelled `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementTable {
    counts: Vec<Vec<u64>>,
}

impl AgreementTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(Error::Empty("agreement table"));
        }
        if counts.iter().any(|r| r.len() != k) {
            return Err(Error::Shape(format!("agreement table must be square, got {k} rows")));
        }
        Ok(AgreementTable { counts })
    }

    /// Tallies label pairs over `classes`.
    pub fn from_pairs<L: PartialEq + Clone + std::fmt::Debug>(
        annotator1: &[L],
        annotator2: &[L],
        classes: &[L],
    ) -> Result<Self> {
        let m = super::confusion(annotator2, annotator1, classes)?;
        AgreementTable::new(m.matrix)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Observed agreement `trace / n`.
    pub fn observed(&self) -> f64 {
        let trace: u64 = (0..self.counts.len()).map(|i| self.counts[i][i]).sum();
        trace as f64 / self.n() as f64
    }

    /// Chance agreement `Σ_c row_c · col_c / n²`.
    pub fn expected(&self) -> f64 {
        let k = self.counts.len();
        let n = self.n() as f64;
        (0..k)
            .map(|c| {
                let row: u64 = self.counts[c].iter().sum();
                let col: u64 = (0..k).map(|r| self.counts[r][c]).sum();
                row as f64 * col as f64
            })
            .sum::<f64>()
            / (n * n)
    }
}

/// `(P_o − P_e) / (1 − P_e)`. For a 2×2 table this is exactly
/// `P_o = (a + d)/n`, `P_e = ((a+b)(a+c) + (c+d)(b+d))/n²`.
///
/// ```
/// use citeaz::metrics::{cohen_kappa, AgreementTable};
///
/// let t = AgreementTable::new(vec![vec![40, 10], vec![10, 40]]).unwrap();
/// assert!((cohen_kappa(&t).unwrap() - 0.6).abs() < 1e-12);
/// ```
pub fn cohen_kappa(table: &AgreementTable) -> Result<f64> {
    if table.n() == 0 {
        return Err(Error::Empty("agreement table with no items"));
    }
    let po = table.observed();
    let pe = table.expected();
    if (1.0 - pe).abs() < 1e-15 {
        return Err(Error::UndefinedKappa);
    }
    Ok((po - pe) / (1.0 - pe))
}
