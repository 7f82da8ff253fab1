use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataio::{self, Dataset, DatasetSchema, DEFAULT_TEST_FRACTION};
use crate::error::{Error, Result};
use crate::lime::LimeParams;
use crate::manifest::{split_list, Entry, Manifest};
use crate::metrics::TieRule;
use crate::rng::mix;
use crate::surrogates::TreeParams;
use crate::svr::{Kernel, SvrParams};

/// What the explainers' predictions are scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FidelityReference {
    /// The black box's own test-set predictions.
    #[default]
    Blackbox,
    /// The observed test-set targets.
    GroundTruth,
}

impl FromStr for FidelityReference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blackbox" => Ok(FidelityReference::Blackbox),
            "truth" | "ground_truth" => Ok(FidelityReference::GroundTruth),
            other => Err(Error::invalid(format!(
                "fidelity reference must be blackbox|truth, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for FidelityReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityReference::Blackbox => "blackbox",
            FidelityReference::GroundTruth => "truth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    #[default]
    Rbf,
    Linear,
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rbf" => Ok(KernelKind::Rbf),
            "linear" => Ok(KernelKind::Linear),
            other => Err(Error::invalid(format!(
                "kernel must be rbf|linear, got `{other}`"
            ))),
        }
    }
}

/// SVR hyperparameters, some of which depend on the feature count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrSettings {
    pub kernel: KernelKind,
    /// RBF width; `1/d` when unset.
    pub gamma: Option<f64>,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Fit on a standardized target and map predictions back.
    pub scale_target: bool,
}

impl Default for SvrSettings {
    fn default() -> Self {
        let p = SvrParams::for_dimension(1);
        SvrSettings {
            kernel: KernelKind::Rbf,
            gamma: None,
            c: p.c,
            epsilon: p.epsilon,
            tol: p.tol,
            max_iter: p.max_iter,
            scale_target: true,
        }
    }
}

impl SvrSettings {
    pub fn resolve(&self, d: usize) -> SvrParams {
        let kernel = match self.kernel {
            KernelKind::Rbf => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / d.max(1) as f64),
            },
            KernelKind::Linear => Kernel::Linear,
        };
        SvrParams {
            c: self.c,
            epsilon: self.epsilon,
            kernel,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimeSettings {
    pub n_samples: usize,
    /// `0.75·√d` when unset.
    pub kernel_width: Option<f64>,
    /// All features when unset.
    pub n_features_used: Option<usize>,
    pub ridge_lambda: f64,
}

impl Default for LimeSettings {
    fn default() -> Self {
        let p = LimeParams::for_dimension(1, 0);
        LimeSettings {
            n_samples: p.n_samples,
            kernel_width: None,
            n_features_used: None,
            ridge_lambda: p.ridge_lambda,
        }
    }
}

impl LimeSettings {
    pub fn resolve(&self, d: usize, seed: u64) -> LimeParams {
        let base = LimeParams::for_dimension(d, seed);
        LimeParams {
            n_samples: self.n_samples,
            kernel_width: self.kernel_width.unwrap_or(base.kernel_width),
            n_features_used: self.n_features_used.unwrap_or(base.n_features_used),
            ridge_lambda: self.ridge_lambda,
            seed,
        }
    }
}

/// Settings shared by every run of a suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub svr: SvrSettings,
    pub tree: TreeParams,
    pub lime: LimeSettings,
    pub test_fraction: f64,
    pub fidelity_reference: FidelityReference,
    pub ties: TieRule,
    /// Standardize features with training statistics before fitting.
    pub standardize: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            svr: SvrSettings::default(),
            tree: TreeParams::default(),
            lime: LimeSettings::default(),
            test_fraction: DEFAULT_TEST_FRACTION,
            fidelity_reference: FidelityReference::Blackbox,
            ties: TieRule::Include,
            standardize: true,
        }
    }
}

/// A dataset schema bound to a file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSource {
    pub schema: DatasetSchema,
    pub path: PathBuf,
}

impl DatasetSource {
    /// A registered schema read from its default file under `data_dir`.
    pub fn registered(name: &str, data_dir: &Path) -> Result<Self> {
        let schema = DatasetSchema::registered(name)
            .ok_or_else(|| Error::invalid(format!("unknown dataset `{name}`")))?;
        let file = schema.default_file.clone().unwrap_or_default();
        Ok(DatasetSource {
            path: dataio::resolve_path(data_dir, &file),
            schema,
        })
    }

    pub fn load(&self) -> Result<Dataset> {
        dataio::load_dataset(&self.path, &self.schema)
    }
}

/// Identity and settings of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// 1-based position in the suite.
    pub index: usize,
    pub source: DatasetSource,
    pub n_features: usize,
    pub seed: u64,
    pub settings: Settings,
}

impl RunConfig {
    /// Short identifier used for output file names, e.g. `run03_wine_6`.
    pub fn id(&self) -> String {
        format!(
            "run{:02}_{}_{}",
            self.index, self.source.schema.name, self.n_features
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RunSpec {
    dataset: String,
    n_features: usize,
    seed: Option<u64>,
    line: usize,
}

/// A parsed suite manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub seed: u64,
    pub settings: Settings,
    pub data_dir: PathBuf,
    pub datasets: BTreeMap<String, DatasetSource>,
    runs: Vec<RunSpec>,
}

pub const DEFAULT_SEED: u64 = 2024;

const DATASET_FIELDS: [&str; 7] = [
    "path",
    "target",
    "columns",
    "drop",
    "expected_columns",
    "expected_rows",
    "dedup",
];

fn bad(e: &Entry, message: impl fmt::Display) -> Error {
    Error::Manifest {
        line: e.line,
        message: format!("`{}`: {message}", e.key),
    }
}

fn value<T>(e: &Entry) -> Result<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    e.value.parse::<T>().map_err(|err| bad(e, err))
}

impl Suite {
    pub fn load(path: &Path) -> Result<Self> {
        Self::from_manifest(&Manifest::load(path)?)
    }

    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        Self::from_manifest(&Manifest::parse(text, base_dir)?)
    }

    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let mut seed = DEFAULT_SEED;
        let mut s = Settings::default();
        let mut data_dir = m.base_dir.clone();
        let mut custom: BTreeMap<String, Vec<&Entry>> = BTreeMap::new();
        let mut runs = Vec::new();

        for e in &m.entries {
            match e.key.as_str() {
                "seed" => seed = value(e)?,
                "test_fraction" => s.test_fraction = value(e)?,
                "fidelity_reference" => s.fidelity_reference = value(e)?,
                "ties" => s.ties = value(e)?,
                "standardize" => s.standardize = value(e)?,
                "data_dir" => data_dir = dataio::resolve_path(&m.base_dir, &e.value),
                "svr.kernel" => s.svr.kernel = value(e)?,
                "svr.gamma" => s.svr.gamma = Some(value(e)?),
                "svr.c" => s.svr.c = value(e)?,
                "svr.epsilon" => s.svr.epsilon = value(e)?,
                "svr.tol" => s.svr.tol = value(e)?,
                "svr.max_iter" => s.svr.max_iter = value(e)?,
                "svr.scale_target" => s.svr.scale_target = value(e)?,
                "tree.min_split" => s.tree.min_split = value(e)?,
                "tree.min_bucket" => s.tree.min_bucket = value(e)?,
                "tree.max_depth" => s.tree.max_depth = value(e)?,
                "tree.cp" => s.tree.cp = value(e)?,
                "lime.n_samples" => s.lime.n_samples = value(e)?,
                "lime.kernel_width" => s.lime.kernel_width = Some(value(e)?),
                "lime.n_features_used" => s.lime.n_features_used = Some(value(e)?),
                "lime.ridge_lambda" => s.lime.ridge_lambda = value(e)?,
                "run" => runs.push(parse_run(e)?),
                key => match key
                    .strip_prefix("dataset.")
                    .and_then(|r| r.rsplit_once('.'))
                {
                    Some((name, field)) if !name.is_empty() && DATASET_FIELDS.contains(&field) => {
                        custom.entry(name.to_string()).or_default().push(e)
                    }
                    _ => return Err(bad(e, "unknown key")),
                },
            }
        }

        let mut datasets = BTreeMap::new();
        for name in &dataio::REGISTERED {
            datasets.insert(
                name.to_string(),
                DatasetSource::registered(name, &data_dir)?,
            );
        }
        for (name, entries) in custom {
            let source = dataset_source(&name, &entries, datasets.get(&name), &data_dir)?;
            datasets.insert(name, source);
        }
        for r in &runs {
            if !datasets.contains_key(&r.dataset) {
                return Err(Error::Manifest {
                    line: r.line,
                    message: format!("run references unknown dataset `{}`", r.dataset),
                });
            }
        }

        let suite = Suite {
            seed,
            settings: s,
            data_dir,
            datasets,
            runs,
        };
        suite.validate()?;
        Ok(suite)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if !(s.test_fraction > 0.0 && s.test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test_fraction must lie in (0, 1), got {}",
                s.test_fraction
            )));
        }
        s.svr.resolve(1).validate()?;
        s.tree.validate()?;
        s.lime.resolve(1, 0).validate()
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    /// Run configurations in manifest order. Runs without an explicit seed
    /// get `mix(suite seed, index)`.
    pub fn configs(&self) -> Vec<RunConfig> {
        self.runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let index = i + 1;
                RunConfig {
                    index,
                    source: self.datasets[&r.dataset].clone(),
                    n_features: r.n_features,
                    seed: r.seed.unwrap_or_else(|| mix(self.seed, index as u64)),
                    settings: self.settings,
                }
            })
            .collect()
    }

    /// The first run on `dataset`, if any.
    pub fn first_run(&self, dataset: &str) -> Option<RunConfig> {
        self.configs()
            .into_iter()
            .find(|c| c.source.schema.name == dataset)
    }
}

fn parse_run(e: &Entry) -> Result<RunSpec> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(bad(e, "expected `<dataset> <n_features> [seed]`"));
    }
    let n_features = parts[1].parse::<usize>().map_err(|err| bad(e, err))?;
    if n_features == 0 {
        return Err(bad(e, "a run needs at least one feature"));
    }
    let seed = match parts.get(2) {
        Some(p) => Some(p.parse::<u64>().map_err(|err| bad(e, err))?),
        None => None,
    };
    Ok(RunSpec {
        dataset: parts[0].to_string(),
        n_features,
        seed,
        line: e.line,
    })
}

/// Build a source from `dataset.<name>.*` entries, starting from the
/// registered schema when the name is one.
fn dataset_source(
    name: &str,
    entries: &[&Entry],
    base: Option<&DatasetSource>,
    data_dir: &Path,
) -> Result<DatasetSource> {
    let prefix = format!("dataset.{name}.");
    let mut path = base.map(|b| b.path.clone());
    let find = |field: &str| {
        entries
            .iter()
            .rev()
            .find(|e| e.key[prefix.len()..] == *field)
    };
    let mut schema = match base {
        Some(b) => b.schema.clone(),
        None => {
            let target = find("target").ok_or_else(|| Error::Manifest {
                line: entries[0].line,
                message: format!("dataset `{name}` needs a target"),
            })?;
            DatasetSchema::custom(name, target.value.clone())
        }
    };
    for e in entries {
        match &e.key[prefix.len()..] {
            "path" => path = Some(dataio::resolve_path(data_dir, &e.value)),
            "target" => schema.target = e.value.clone(),
            "columns" => schema.columns = Some(split_list(&e.value)),
            "drop" => schema.drop = split_list(&e.value),
            "expected_columns" => schema.expected_columns = Some(value(e)?),
            "expected_rows" => schema.expected_rows = Some(value(e)?),
            "dedup" => schema.dedup = value(e)?,
            _ => unreachable!("filtered by DATASET_FIELDS"),
        }
    }
    let path = path.ok_or_else(|| Error::Manifest {
        line: entries[0].line,
        message: format!("dataset `{name}` needs a path"),
    })?;
    Ok(DatasetSource { schema, path })
}
