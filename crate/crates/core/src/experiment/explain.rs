use std::fmt;

use crate::dataio::Dataset;
use crate::error::{Error, Result, StageExt};
use crate::lime::{self, explain_instance, Explanation, LimeParams};
use crate::surrogates::Rule;

use super::{fit_pipeline, RunConfig};

/// All three explanations of one test-set row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowExplanation {
    pub run: String,
    /// Position in the test set.
    pub row: usize,
    /// Position in the loaded dataset.
    pub source_row: usize,
    pub feature_names: Vec<String>,
    /// Model-space feature values (standardized when the run standardizes).
    pub instance: Vec<f64>,
    pub target: f64,
    pub svr_prediction: f64,
    pub tree_path: Rule,
    pub mlr_intercept: f64,
    pub mlr_contributions: Vec<f64>,
    pub mlr_prediction: f64,
    pub lime: Explanation,
}

/// Fit the run's models and explain test row `row` with each of them.
pub fn explain_row(config: &RunConfig, data: &Dataset, row: usize) -> Result<RowExplanation> {
    let fitted = fit_pipeline(config, data)?;
    let test = &fitted.split.test;
    if row >= test.n_rows() {
        return Err(Error::invalid(format!(
            "row {row} out of range: the test set has {} rows",
            test.n_rows()
        )));
    }
    let instance = test.x.row(row).to_vec();
    let tree_path = fitted
        .tree
        .decision_path(&instance, &fitted.feature_names)
        .stage("fit_tree")?;
    let mlr = &fitted.surrogate_mlr;
    let mlr_contributions = mlr.contributions(&instance).stage("fit_surrogate_mlr")?;
    let params = LimeParams {
        seed: lime::instance_seed(fitted.lime.seed, row),
        ..fitted.lime
    };
    let explanation = explain_instance(test.x.row(row), &fitted.svr, &fitted.train_stats, &params)
        .stage("lime")?;
    Ok(RowExplanation {
        run: config.id(),
        row,
        source_row: fitted.split.test_indices[row],
        feature_names: fitted.feature_names.clone(),
        instance,
        target: test.y[row],
        svr_prediction: fitted.svr_test[row],
        tree_path,
        mlr_intercept: mlr.intercept,
        mlr_prediction: mlr.intercept + mlr_contributions.iter().sum::<f64>(),
        mlr_contributions,
        lime: explanation,
    })
}

impl RowExplanation {
    /// LIME weight times value per feature; zero for unselected features.
    pub fn lime_contributions(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.instance.len()];
        for (k, &j) in self.lime.selected_features.iter().enumerate() {
            out[j] = self.lime.weights[k] * self.instance[j];
        }
        out
    }
}

impl fmt::Display for RowExplanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} test row {} (dataset row {}): target {:.4}, SVR {:.4}",
            self.run, self.row, self.source_row, self.target, self.svr_prediction
        )?;
        writeln!(f)?;
        writeln!(f, "tree:  {}", self.tree_path)?;
        writeln!(f)?;
        let width = self
            .feature_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(7)
            .max(9);
        writeln!(
            f,
            "{:<width$} {:>12} {:>14} {:>14}",
            "feature", "value", "MLR contrib", "LIME contrib"
        )?;
        let lime = self.lime_contributions();
        for (j, name) in self.feature_names.iter().enumerate() {
            writeln!(
                f,
                "{:<width$} {:>12.4} {:>14.4} {:>14.4}",
                name, self.instance[j], self.mlr_contributions[j], lime[j]
            )?;
        }
        writeln!(
            f,
            "{:<width$} {:>12} {:>14.4} {:>14.4}",
            "intercept", "", self.mlr_intercept, self.lime.intercept
        )?;
        writeln!(
            f,
            "{:<width$} {:>12} {:>14.4} {:>14.4}",
            "prediction", "", self.mlr_prediction, self.lime.local_prediction
        )?;
        write!(f, "tree prediction {:.4}", self.tree_path.prediction)
    }
}
