//! Global and local fidelity of explainers to the black box.

use std::fmt;

use ndarray::ArrayView1;

use crate::error::{check_dim, Error, Result};

/// Root-mean-square difference between two equal-length vectors.
pub fn rmse(pred: ArrayView1<f64>, reference: ArrayView1<f64>) -> Result<f64> {
    check_dim(reference.len(), pred.len())?;
    if pred.is_empty() {
        return Err(Error::invalid("rmse of empty vectors"));
    }
    let ss: f64 = pred
        .iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// One row of global fidelity RMSEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub rmse_mlr: f64,
    pub rmse_tree: f64,
    pub rmse_lime: f64,
}

/// RMSE of each explainer's predictions against the reference predictions
/// (normally the black box's own test-set outputs).
pub fn global_fidelity(
    reference: ArrayView1<f64>,
    tree_preds: ArrayView1<f64>,
    lin_preds: ArrayView1<f64>,
    lime_preds: ArrayView1<f64>,
) -> Result<FidelityReport> {
    Ok(FidelityReport {
        rmse_mlr: rmse(lin_preds, reference)?,
        rmse_tree: rmse(tree_preds, reference)?,
        rmse_lime: rmse(lime_preds, reference)?,
    })
}

/// How a record where both explainers have the same squared error is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Ties count as a win for the challenger (`≤`).
    #[default]
    Include,
    /// Only strictly smaller errors count (`<`).
    Strict,
}

impl TieRule {
    pub fn wins(self, challenger: f64, incumbent: f64) -> bool {
        match self {
            TieRule::Include => challenger <= incumbent,
            TieRule::Strict => challenger < incumbent,
        }
    }
}

impl std::str::FromStr for TieRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(TieRule::Include),
            "strict" => Ok(TieRule::Strict),
            other => Err(Error::invalid(format!(
                "tie rule must be include|strict, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for TieRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieRule::Include => "include",
            TieRule::Strict => "strict",
        })
    }
}

/// Per-record squared-error win counts against LIME.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalWinCounts {
    /// Records where the tree's squared error beats LIME's.
    pub x1: usize,
    /// Records where the linear model's squared error beats LIME's.
    pub x2: usize,
    pub total: usize,
}

impl LocalWinCounts {
    pub fn new(x1: usize, x2: usize, total: usize) -> Result<Self> {
        if total == 0 || x1 > total || x2 > total {
            return Err(Error::invalid(format!(
                "win counts ({x1}, {x2}) inconsistent with total {total}"
            )));
        }
        Ok(LocalWinCounts { x1, x2, total })
    }

    pub fn pct1(&self) -> f64 {
        percentage(self.x1, self.total)
    }

    pub fn pct2(&self) -> f64 {
        percentage(self.x2, self.total)
    }
}

/// `count / total · 100` at full precision.
pub fn percentage(count: usize, total: usize) -> f64 {
    count as f64 / total as f64 * 100.0
}

/// Round half away from zero to two decimals, as shown in reports.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Squared errors of each surrogate against the reference, counted per record.
pub fn local_win_counts(
    tree_preds: ArrayView1<f64>,
    lin_preds: ArrayView1<f64>,
    lime_preds: ArrayView1<f64>,
    reference: ArrayView1<f64>,
    ties: TieRule,
) -> Result<LocalWinCounts> {
    let t = reference.len();
    for len in [tree_preds.len(), lin_preds.len(), lime_preds.len()] {
        check_dim(t, len)?;
    }
    if t == 0 {
        return Err(Error::invalid("no records to compare"));
    }
    let mut x1 = 0;
    let mut x2 = 0;
    for i in 0..t {
        let e_tree = (tree_preds[i] - reference[i]).powi(2);
        let e_lin = (lin_preds[i] - reference[i]).powi(2);
        let e_lime = (lime_preds[i] - reference[i]).powi(2);
        x1 += ties.wins(e_tree, e_lime) as usize;
        x2 += ties.wins(e_lin, e_lime) as usize;
    }
    LocalWinCounts::new(x1, x2, t)
}

/// `wins` out of `total` comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WinRate {
    pub wins: usize,
    pub total: usize,
}

impl WinRate {
    pub fn fraction(&self) -> f64 {
        self.wins as f64 / self.total as f64
    }

    /// Percentage rounded to the nearest integer.
    pub fn percent(&self) -> u32 {
        (self.fraction() * 100.0).round() as u32
    }
}

impl fmt::Display for WinRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} ({}%)", self.wins, self.total, self.percent())
    }
}

/// Strict-inequality run counts over global fidelity rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WinRates {
    pub tree_vs_lime: WinRate,
    pub mlr_vs_lime: WinRate,
    pub tree_vs_mlr: WinRate,
}

pub fn win_rate(rows: &[FidelityReport]) -> Result<WinRates> {
    if rows.is_empty() {
        return Err(Error::invalid("win rate over zero runs"));
    }
    let count = |f: &dyn Fn(&FidelityReport) -> bool| WinRate {
        wins: rows.iter().filter(|r| f(r)).count(),
        total: rows.len(),
    };
    Ok(WinRates {
        tree_vs_lime: count(&|r| r.rmse_tree < r.rmse_lime),
        mlr_vs_lime: count(&|r| r.rmse_mlr < r.rmse_lime),
        tree_vs_mlr: count(&|r| r.rmse_tree < r.rmse_mlr),
    })
}
