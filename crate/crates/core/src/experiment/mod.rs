//! Seeded benchmark runs: fit the black box and its explainers on one
//! dataset/feature-count configuration, score them, and aggregate runs into
//! suite-level statistics.

mod config;
mod explain;
mod tables;

use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView2};

pub use config::{
    DatasetSource, FidelityReference, KernelKind, LimeSettings, RunConfig, Settings, Suite,
    SvrSettings, DEFAULT_SEED,
};
pub use explain::{explain_row, RowExplanation};
pub use tables::{
    display_name, displays_as, read_table2, read_table3, replay_tables, summarize, table2_csv,
    table3_csv, write_outputs, Comparison, SuiteStatistics, SuiteSummary, Table2Row, Table3Row,
    REFERENCE_TABLE2, REFERENCE_TABLE3, TABLE2_HEADER, TABLE3_HEADER,
};

use crate::dataio::{self, Dataset, FeatureStats, LoadReport, ScalingParams, SplitPair};
use crate::error::{Error, Result, StageExt};
use crate::lime::{self, BlackBox, Explanation, LimeParams};
use crate::metrics::{self, FidelityReport, LocalWinCounts};
use crate::rng::mix;
use crate::surrogates::{self, LinModel, Rule, TreeModel};
use crate::svr::{fit_svr, SvrModel};

/// Significance level for every cross-technique comparison.
pub const ALPHA: f64 = 0.05;

/// SVR fitted on a standardized target; predictions are mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackBoxSvr {
    pub model: SvrModel,
    pub target_mean: f64,
    pub target_scale: f64,
}

impl BlackBoxSvr {
    pub fn fit(x: ArrayView2<f64>, y: &Array1<f64>, settings: &SvrSettings) -> Result<Self> {
        let (target_mean, target_scale) = if settings.scale_target {
            let n = y.len() as f64;
            let m = y.sum() / n;
            let sd = if y.len() > 1 {
                (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            (m, if sd > 0.0 { sd } else { 1.0 })
        } else {
            (0.0, 1.0)
        };
        let ys = y.mapv(|v| (v - target_mean) / target_scale);
        let model = fit_svr(x, ys.view(), &settings.resolve(x.ncols()))?;
        Ok(BlackBoxSvr {
            model,
            target_mean,
            target_scale,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        Ok(self.model.predict(x)? * self.target_scale + self.target_mean)
    }
}

impl BlackBox for BlackBoxSvr {
    fn n_features(&self) -> usize {
        self.model.n_features()
    }

    fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.predict(x)
    }
}

/// Every model of one run, before scoring.
#[derive(Debug, Clone)]
pub struct FittedRun {
    pub feature_indices: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Train/test data, standardized when the run asks for it.
    pub split: SplitPair,
    pub scaling: Option<ScalingParams>,
    pub direct_mlr: LinModel,
    pub svr: BlackBoxSvr,
    pub svr_train: Array1<f64>,
    pub svr_test: Array1<f64>,
    pub tree: TreeModel,
    pub surrogate_mlr: LinModel,
    pub train_stats: FeatureStats,
    pub lime: LimeParams,
}

/// Seeds of the randomized stages, derived from the run seed.
pub fn stage_seeds(seed: u64) -> (u64, u64, u64) {
    (mix(seed, 1), mix(seed, 2), mix(seed, 3))
}

/// Feature selection, split, scaling and every model fit.
pub fn fit_pipeline(config: &RunConfig, data: &Dataset) -> Result<FittedRun> {
    let s = &config.settings;
    let (feature_seed, split_seed, lime_seed) = stage_seeds(config.seed);
    let feature_indices =
        dataio::choose_features(data.n_features(), config.n_features, feature_seed)
            .stage("select_features")?;
    let subset = dataio::project(data, &feature_indices);
    let raw = dataio::split(&subset, s.test_fraction, split_seed).stage("split")?;
    let (split, scaling) = if s.standardize {
        let (train, test, params) =
            dataio::standardize(&raw.train, &raw.test).stage("standardize")?;
        (SplitPair { train, test, ..raw }, Some(params))
    } else {
        (raw, None)
    };
    let train = &split.train;
    let test = &split.test;

    let direct_mlr = surrogates::fit_ols(train.x.view(), train.y.view()).stage("fit_direct_mlr")?;
    let svr = BlackBoxSvr::fit(train.x.view(), &train.y, &s.svr).stage("fit_svr")?;
    let svr_train = svr.predict(train.x.view()).stage("predict_svr")?;
    let svr_test = svr.predict(test.x.view()).stage("predict_svr")?;
    let tree = surrogates::fit_tree(train.x.view(), svr_train.view(), &s.tree).stage("fit_tree")?;
    let surrogate_mlr =
        surrogates::fit_ols(train.x.view(), svr_train.view()).stage("fit_surrogate_mlr")?;
    let train_stats = FeatureStats::from_matrix(train.x.view());
    let lime = s.lime.resolve(config.n_features, lime_seed);
    lime.validate().stage("lime")?;

    Ok(FittedRun {
        feature_names: subset.columns.clone(),
        feature_indices,
        split,
        scaling,
        direct_mlr,
        svr,
        svr_train,
        svr_test,
        tree,
        surrogate_mlr,
        train_stats,
        lime,
    })
}

/// Outputs kept for audit dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub rules: Vec<Rule>,
    pub importance: Array1<f64>,
    pub explanations: Vec<Explanation>,
}

/// One scored run: a Table 2 row, a Table 3 row and the validity gate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config: RunConfig,
    pub feature_names: Vec<String>,
    pub n_train: usize,
    pub n_test: usize,
    /// Test RMSE of a linear model fitted directly to the targets.
    pub direct_rmse_mlr: f64,
    /// Test RMSE of the black box against the targets.
    pub direct_rmse_svr: f64,
    /// The black box beats the direct linear model, so explaining it is worthwhile.
    pub gate_passed: bool,
    pub fidelity: FidelityReport,
    pub local: LocalWinCounts,
    pub n_support_vectors: usize,
    pub load_report: LoadReport,
    pub artifacts: RunArtifacts,
}

impl RunRecord {
    pub fn table2_row(&self) -> Table2Row {
        Table2Row {
            dataset: display_name(&self.config.source.schema.name).to_string(),
            n_variables: self.config.n_features,
            rmse_mlr: self.fidelity.rmse_mlr,
            rmse_tree: self.fidelity.rmse_tree,
            rmse_lime: self.fidelity.rmse_lime,
        }
    }

    pub fn table3_row(&self) -> Table3Row {
        Table3Row::from_counts(
            display_name(&self.config.source.schema.name).to_string(),
            self.local,
        )
    }
}

/// Run the full protocol for one configuration on an already-loaded dataset.
pub fn run_on_dataset(config: &RunConfig, data: &Dataset) -> Result<RunRecord> {
    let fitted = fit_pipeline(config, data)?;
    let test = &fitted.split.test;

    let mlr_direct_pred = fitted
        .direct_mlr
        .predict(test.x.view())
        .stage("fit_direct_mlr")?;
    let direct_rmse_mlr = metrics::rmse(mlr_direct_pred.view(), test.y.view()).stage("fidelity")?;
    let direct_rmse_svr = metrics::rmse(fitted.svr_test.view(), test.y.view()).stage("fidelity")?;

    let tree_test = fitted.tree.predict(test.x.view()).stage("fit_tree")?;
    let mlr_test = fitted
        .surrogate_mlr
        .predict(test.x.view())
        .stage("fit_surrogate_mlr")?;
    let explanations = lime::explain_all(
        test.x.view(),
        &fitted.svr,
        &fitted.train_stats,
        &fitted.lime,
    )
    .stage("lime")?;
    let lime_test: Array1<f64> = explanations.iter().map(|e| e.local_prediction).collect();

    let reference = match config.settings.fidelity_reference {
        FidelityReference::Blackbox => &fitted.svr_test,
        FidelityReference::GroundTruth => &test.y,
    };
    let fidelity = metrics::global_fidelity(
        reference.view(),
        tree_test.view(),
        mlr_test.view(),
        lime_test.view(),
    )
    .stage("fidelity")?;
    let local = metrics::local_win_counts(
        tree_test.view(),
        mlr_test.view(),
        lime_test.view(),
        reference.view(),
        config.settings.ties,
    )
    .stage("local_counts")?;

    Ok(RunRecord {
        config: config.clone(),
        n_train: fitted.split.train.n_rows(),
        n_test: test.n_rows(),
        direct_rmse_mlr,
        direct_rmse_svr,
        gate_passed: direct_rmse_mlr > direct_rmse_svr,
        fidelity,
        local,
        n_support_vectors: fitted.svr.model.n_support(),
        load_report: data.report.clone(),
        artifacts: RunArtifacts {
            rules: surrogates::extract_rules(&fitted.tree, &fitted.feature_names),
            importance: surrogates::feature_importance(&fitted.tree),
            explanations,
        },
        feature_names: fitted.feature_names,
    })
}

/// Load the configured dataset and run it.
pub fn run_one(config: &RunConfig) -> Result<RunRecord> {
    let data = config.source.load().stage("load")?;
    run_on_dataset(config, &data)
}

/// A run that did not complete.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub config: RunConfig,
    pub stage: Option<&'static str>,
    pub message: String,
}

impl RunFailure {
    fn new(config: &RunConfig, err: Error) -> Self {
        RunFailure {
            config: config.clone(),
            stage: err.stage(),
            message: err.to_string(),
        }
    }
}

pub type RunOutcome = std::result::Result<RunRecord, RunFailure>;

/// Execute every configuration, loading each dataset file once, and
/// aggregate the completed runs.
///
/// Failed runs are kept in the summary; statistics use completed runs only.
pub fn run_suite(configs: &[RunConfig]) -> Result<SuiteSummary> {
    if configs.len() < 2 {
        return Err(Error::invalid(format!(
            "a suite needs at least 2 runs, got {}",
            configs.len()
        )));
    }
    let mut cache: BTreeMap<String, std::result::Result<Dataset, String>> = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(configs.len());
    for config in configs {
        let key = format!(
            "{}|{}",
            config.source.schema.name,
            config.source.path.display()
        );
        let loaded = cache
            .entry(key)
            .or_insert_with(|| config.source.load().map_err(|e| e.to_string()));
        let outcome = match loaded {
            Ok(data) => run_on_dataset(config, data).map_err(|e| RunFailure::new(config, e)),
            Err(msg) => Err(RunFailure {
                config: config.clone(),
                stage: Some("load"),
                message: format!("stage `load` failed: {msg}"),
            }),
        };
        outcomes.push(outcome);
    }
    SuiteSummary::from_outcomes(outcomes)
}
