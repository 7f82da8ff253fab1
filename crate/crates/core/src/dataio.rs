//! Loading, validation, splitting, feature subsetting and standardization of
//! tabular regression datasets.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Default fraction of rows held out for testing.
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

/// What the loader expects to find in a file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSchema {
    pub name: String,
    /// Column names for files without a header row.
    pub columns: Option<Vec<String>>,
    pub target: String,
    /// Columns removed before parsing (identifiers, free text, sparse fields).
    pub drop: Vec<String>,
    /// Expected column count including the target, after drops.
    pub expected_columns: Option<usize>,
    pub expected_rows: Option<usize>,
    /// Remove exact duplicate rows, keeping the first occurrence.
    pub dedup: bool,
    /// File name used when a manifest gives no explicit path.
    pub default_file: Option<String>,
}

/// Names of the built-in dataset schemas.
pub const REGISTERED: [&str; 5] = ["wine", "boston", "yacht", "computer_hardware", "auto"];

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

impl DatasetSchema {
    /// Minimal schema for a user-supplied file.
    pub fn custom(name: impl Into<String>, target: impl Into<String>) -> Self {
        DatasetSchema {
            name: name.into(),
            columns: None,
            target: target.into(),
            drop: Vec::new(),
            expected_columns: None,
            expected_rows: None,
            dedup: false,
            default_file: None,
        }
    }

    /// One of the five UCI regression schemas.
    pub fn registered(name: &str) -> Option<Self> {
        let schema = match name {
            // Red wine quality; the header row carries the column names.
            "wine" => DatasetSchema {
                expected_columns: Some(12),
                expected_rows: Some(1359),
                dedup: true,
                default_file: Some("winequality-red.csv".into()),
                ..DatasetSchema::custom("wine", "quality")
            },
            "boston" => DatasetSchema {
                columns: Some(names(&[
                    "CRIM", "ZN", "INDUS", "CHAS", "NOX", "RM", "AGE", "DIS", "RAD", "TAX",
                    "PTRATIO", "B", "LSTAT", "MEDV",
                ])),
                expected_columns: Some(14),
                expected_rows: Some(506),
                default_file: Some("housing.data".into()),
                ..DatasetSchema::custom("boston", "MEDV")
            },
            "yacht" => DatasetSchema {
                columns: Some(names(&[
                    "LongPos",
                    "PrismaticCoef",
                    "LengthDisplacement",
                    "BeamDraught",
                    "LengthBeam",
                    "Froude",
                    "Resistance",
                ])),
                expected_columns: Some(7),
                expected_rows: Some(308),
                default_file: Some("yacht_hydrodynamics.data".into()),
                ..DatasetSchema::custom("yacht", "Resistance")
            },
            "computer_hardware" => DatasetSchema {
                columns: Some(names(&[
                    "vendor", "model", "MYCT", "MMIN", "MMAX", "CACH", "CHMIN", "CHMAX", "PRP",
                    "ERP",
                ])),
                drop: names(&["vendor", "model"]),
                expected_columns: Some(10),
                expected_rows: Some(209),
                default_file: Some("machine.data".into()),
                ..DatasetSchema::custom("computer_hardware", "PRP")
            },
            // horsepower has missing cells and car_name is free text.
            "auto" => DatasetSchema {
                columns: Some(names(&[
                    "mpg",
                    "cylinders",
                    "displacement",
                    "horsepower",
                    "weight",
                    "acceleration",
                    "model_year",
                    "origin",
                    "car_name",
                ])),
                drop: names(&["horsepower", "car_name"]),
                expected_columns: Some(7),
                expected_rows: Some(398),
                default_file: Some("auto-mpg.data".into()),
                ..DatasetSchema::custom("auto", "mpg")
            },
            _ => return None,
        };
        Some(schema)
    }
}

/// Bookkeeping from [`load_dataset`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub dropped_rows: usize,
    pub duplicates_removed: usize,
    /// Human-readable differences between the loaded data and the schema's counts.
    pub deviations: Vec<String>,
}

/// A numeric feature matrix with its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub target_name: String,
    pub report: LoadReport,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        columns: Vec<String>,
        x: Array2<f64>,
        y: Array1<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if x.ncols() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                got: columns.len(),
            });
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            x,
            y,
            target_name: target_name.into(),
            report: LoadReport::default(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `indices`, in the given order.
    pub fn take_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            columns: self.columns.clone(),
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
            target_name: self.target_name.clone(),
            report: self.report.clone(),
        }
    }

    fn with_x(&self, x: Array2<f64>) -> Dataset {
        Dataset { x, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Delimiter {
    Char(char),
    Whitespace,
}

fn detect_delimiter(line: &str) -> Delimiter {
    if line.contains(',') {
        Delimiter::Char(',')
    } else if line.contains(';') {
        Delimiter::Char(';')
    } else if line.contains('\t') && !line.contains(' ') {
        Delimiter::Char('\t')
    } else {
        Delimiter::Whitespace
    }
}

/// Splits a line into cells; double-quoted cells may contain delimiters.
fn tokenize(line: &str, delim: Delimiter) -> Vec<String> {
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut has_cell = false;
    for ch in line.chars() {
        if ch == '"' {
            in_quotes = !in_quotes;
            has_cell = true;
            continue;
        }
        let is_sep = !in_quotes
            && match delim {
                Delimiter::Char(c) => ch == c,
                Delimiter::Whitespace => ch.is_whitespace(),
            };
        if is_sep {
            match delim {
                Delimiter::Char(_) => {
                    cells.push(cur.trim().to_string());
                    cur.clear();
                    has_cell = false;
                }
                Delimiter::Whitespace => {
                    if has_cell {
                        cells.push(std::mem::take(&mut cur));
                        has_cell = false;
                    }
                }
            }
        } else {
            cur.push(ch);
            if !ch.is_whitespace() || matches!(delim, Delimiter::Char(_)) {
                has_cell = true;
            }
        }
    }
    match delim {
        Delimiter::Char(_) => cells.push(cur.trim().to_string()),
        Delimiter::Whitespace => {
            if has_cell {
                cells.push(cur);
            }
        }
    }
    cells
}

fn parse_num(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Read a delimited text file into a [`Dataset`].
///
/// The delimiter (comma, semicolon, tab or whitespace) and the presence of a
/// header row are detected from the first non-blank line. Rows with the
/// wrong number of cells or any unparsable retained cell are dropped and
/// counted. Count mismatches against the schema are reported in
/// [`LoadReport::deviations`], not treated as errors.
pub fn load_dataset(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, schema)
}

/// [`load_dataset`] on in-memory text.
pub fn parse_dataset(text: &str, schema: &DatasetSchema) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .peekable();
    let first = match lines.peek() {
        Some(l) => *l,
        None => return Err(Error::EmptyDataset(schema.name.clone())),
    };
    let delim = detect_delimiter(first);
    let first_cells = tokenize(first, delim);
    let has_header = first_cells.iter().all(|c| parse_num(c).is_none());

    let header: Vec<String> = if has_header {
        lines.next();
        first_cells
    } else if let Some(cols) = &schema.columns {
        cols.clone()
    } else {
        (1..=first_cells.len()).map(|i| format!("V{i}")).collect()
    };

    let target_idx = header
        .iter()
        .position(|h| *h == schema.target)
        .ok_or_else(|| Error::Schema(format!("target column `{}` not found", schema.target)))?;
    let mut dropped_cols = HashSet::new();
    for d in &schema.drop {
        let i = header
            .iter()
            .position(|h| h == d)
            .ok_or_else(|| Error::Schema(format!("drop column `{d}` not found")))?;
        if i == target_idx {
            return Err(Error::Schema(format!(
                "cannot drop the target column `{d}`"
            )));
        }
        dropped_cols.insert(i);
    }
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|i| *i != target_idx && !dropped_cols.contains(i))
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped_rows = 0;
    let mut target_ever_numeric = false;
    let mut seen_rows = 0;
    for line in lines {
        seen_rows += 1;
        let cells = tokenize(line, delim);
        if cells.len() != header.len() {
            dropped_rows += 1;
            continue;
        }
        let target = parse_num(&cells[target_idx]);
        target_ever_numeric |= target.is_some();
        let feats: Option<Vec<f64>> = feature_idx.iter().map(|&i| parse_num(&cells[i])).collect();
        match (feats, target) {
            (Some(mut f), Some(t)) => {
                f.push(t);
                rows.push(f);
            }
            _ => dropped_rows += 1,
        }
    }
    if seen_rows > 0 && !target_ever_numeric {
        return Err(Error::Schema(format!(
            "target column `{}` is not numeric",
            schema.target
        )));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset(schema.name.clone()));
    }

    let mut duplicates_removed = 0;
    if schema.dedup {
        let mut seen = HashSet::new();
        let before = rows.len();
        rows.retain(|r| seen.insert(r.iter().map(|v| v.to_bits()).collect::<Vec<_>>()));
        duplicates_removed = before - rows.len();
    }

    let n = rows.len();
    let p = feature_idx.len();
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..p {
            x[[i, j]] = r[j];
        }
        y[i] = r[p];
    }

    let mut deviations = Vec::new();
    if let Some(cols) = schema.expected_columns {
        if p + 1 != cols {
            deviations.push(format!(
                "{}: expected {cols} columns, loaded {} ({} features + target)",
                schema.name,
                p + 1,
                p
            ));
        }
    }
    if let Some(expected) = schema.expected_rows {
        if n != expected {
            deviations.push(format!(
                "{}: expected {expected} rows, loaded {n}",
                schema.name
            ));
        }
    }

    Ok(Dataset {
        name: schema.name.clone(),
        columns: feature_idx.iter().map(|&i| header[i].clone()).collect(),
        x,
        y,
        target_name: schema.target.clone(),
        report: LoadReport {
            dropped_rows,
            duplicates_removed,
            deviations,
        },
    })
}

/// A seeded train/test partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    /// Parent row indices, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Test-set size: `test_fraction · n` rounded half-up, kept within `1..n`.
pub fn test_size(n_rows: usize, test_fraction: f64) -> usize {
    let raw = (test_fraction * n_rows as f64 + 0.5).floor() as usize;
    raw.clamp(1, n_rows.saturating_sub(1).max(1))
}

/// Random train/test split, deterministic in `(d, test_fraction, seed)`.
pub fn split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = d.n_rows();
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    let n_test = test_size(n, test_fraction);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::rng(seed));
    let mut test_indices = perm[..n_test].to_vec();
    let mut train_indices = perm[n_test..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(SplitPair {
        train: d.take_rows(&train_indices),
        test: d.take_rows(&test_indices),
        train_indices,
        test_indices,
        seed,
        test_fraction,
    })
}

/// Indices of `k` distinct feature columns drawn uniformly, ascending.
pub fn choose_features(n_features: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n_features {
        return Err(Error::invalid(format!(
            "feature count {k} outside 1..={n_features}"
        )));
    }
    let mut idx = rand::seq::index::sample(&mut rng::rng(seed), n_features, k).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Project `d` onto `k` randomly chosen features; the target is untouched.
pub fn select_features(d: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    let idx = choose_features(d.n_features(), k, seed)?;
    Ok(project(d, &idx))
}

/// Project `d` onto the given feature columns.
pub fn project(d: &Dataset, indices: &[usize]) -> Dataset {
    Dataset {
        columns: indices.iter().map(|&i| d.columns[i].clone()).collect(),
        ..d.with_x(d.x.select(Axis(1), indices))
    }
}

/// Per-feature location and spread.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Array1<f64>,
    /// Sample standard deviation (n − 1 denominator); 0 for a single row.
    pub sd: Array1<f64>,
}

impl FeatureStats {
    pub fn from_matrix(x: ArrayView2<f64>) -> Self {
        let n = x.nrows();
        let p = x.ncols();
        let mut mean = Array1::zeros(p);
        let mut sd = Array1::zeros(p);
        for j in 0..p {
            let col = x.column(j);
            let m = col.sum() / n.max(1) as f64;
            mean[j] = m;
            if n > 1 {
                let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
                sd[j] = (ss / (n - 1) as f64).sqrt();
            }
        }
        FeatureStats { mean, sd }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Train-set statistics used to standardize features.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub stats: FeatureStats,
    /// Features with zero training variance; these pass through unscaled.
    pub degenerate: Vec<bool>,
}

impl ScalingParams {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let stats = FeatureStats::from_matrix(x);
        let degenerate = stats.sd.iter().map(|&s| !(s > 0.0)).collect();
        ScalingParams { stats, degenerate }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            if !self.degenerate[j] {
                let (m, s) = (self.stats.mean[j], self.stats.sd[j]);
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        out
    }

    pub fn inverse_transform(&self, z: ArrayView2<f64>) -> Array2<f64> {
        let mut out = z.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            if !self.degenerate[j] {
                let (m, s) = (self.stats.mean[j], self.stats.sd[j]);
                col.mapv_inplace(|v| v * s + m);
            }
        }
        out
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.degenerate[j] {
                    v
                } else {
                    (v - self.stats.mean[j]) / self.stats.sd[j]
                }
            })
            .collect()
    }
}

/// Standardize train features to mean 0 / sd 1 and apply the same map to test.
pub fn standardize(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset, ScalingParams)> {
    crate::error::check_dim(train.n_features(), test.n_features())?;
    let params = ScalingParams::fit(train.x.view());
    let tr = train.with_x(params.transform(train.x.view()));
    let te = test.with_x(params.transform(test.x.view()));
    Ok((tr, te, params))
}

/// Resolve a dataset file relative to a base directory.
pub fn resolve_path(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dropped {} unparsable rows, removed {} duplicates",
            self.dropped_rows, self.duplicates_removed
        )?;
        for d in &self.deviations {
            write!(f, "; {d}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn toy(n: usize, p: usize) -> Dataset {
        let x = Array2::from_shape_fn((n, p), |(i, j)| (i * p + j) as f64);
        let y = Array1::from_shape_fn(n, |i| i as f64);
        let cols = (0..p).map(|j| format!("f{j}")).collect();
        Dataset::new("toy", cols, x, y, "t").unwrap()
    }

    #[test]
    fn header_and_comma_detection() {
        let text = "a,b,target\n1,2,3\n4,5,6\n";
        let d = parse_dataset(text, &DatasetSchema::custom("t", "target")).unwrap();
        assert_eq!(d.columns, vec!["a", "b"]);
        assert_eq!(d.x, array![[1.0, 2.0], [4.0, 5.0]]);
        assert_eq!(d.y, array![3.0, 6.0]);
    }

    #[test]
    fn whitespace_with_quoted_text_and_missing_cells() {
        let text = "18.0   8   307.0   130.0\t\"chevrolet chevelle malibu\"\n\
                    25.0   4   98.00   ?\t\"ford pinto\"\n";
        let mut schema = DatasetSchema::custom("auto", "mpg");
        schema.columns = Some(names(&["mpg", "cyl", "disp", "hp", "name"]));
        schema.drop = names(&["name"]);
        let d = parse_dataset(text, &schema).unwrap();
        assert_eq!(d.n_rows(), 1);
        assert_eq!(d.report.dropped_rows, 1);

        schema.drop = names(&["name", "hp"]);
        let d = parse_dataset(text, &schema).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.columns, vec!["cyl", "disp"]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let err = parse_dataset("", &DatasetSchema::custom("e", "y")).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
        let err = parse_dataset("\n  \n", &DatasetSchema::custom("e", "y")).unwrap_err();
        assert!(matches!(err, Error::EmptyDataset(_)));
    }

    #[test]
    fn non_numeric_target_is_a_schema_error() {
        let text = "x,label\n1,a\n2,b\n";
        let err = parse_dataset(text, &DatasetSchema::custom("c", "label")).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_dataset(
            Path::new("/nonexistent/x.csv"),
            &DatasetSchema::custom("x", "y"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn dedup_and_count_deviation() {
        let text = "a,y\n1,2\n1,2\n3,4\n";
        let mut schema = DatasetSchema::custom("d", "y");
        schema.dedup = true;
        schema.expected_rows = Some(3);
        schema.expected_columns = Some(2);
        let d = parse_dataset(text, &schema).unwrap();
        assert_eq!(d.n_rows(), 2);
        assert_eq!(d.report.duplicates_removed, 1);
        assert_eq!(d.report.deviations.len(), 1);
    }

    #[test]
    fn semicolon_files() {
        let text = "\"a\";\"b\";\"quality\"\n7.4;0.7;5\n";
        let d = parse_dataset(text, &DatasetSchema::custom("w", "quality")).unwrap();
        assert_eq!(d.columns, vec!["a", "b"]);
        assert_eq!(d.y[0], 5.0);
    }

    #[test]
    fn split_sizes_follow_round_half_up() {
        assert_eq!(test_size(1359, 0.2), 272);
        assert_eq!(test_size(506, 0.2), 101);
        assert_eq!(test_size(308, 0.2), 62);
        assert_eq!(test_size(209, 0.2), 42);
        assert_eq!(test_size(398, 0.2), 80);
        assert_eq!(test_size(2, 0.01), 1);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = toy(10, 2);
        assert!(split(&d, 0.0, 1).is_err());
        assert!(split(&d, 1.0, 1).is_err());
        assert!(split(&toy(1, 2), 0.5, 1).is_err());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let d = toy(50, 3);
        let a = split(&d, 0.2, 9).unwrap();
        let b = split(&d, 0.2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.test.n_rows(), 10);
        let mut all: Vec<usize> = a
            .train_indices
            .iter()
            .chain(&a.test_indices)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn full_feature_selection_is_identity() {
        let d = toy(5, 4);
        let s = select_features(&d, 4, 3).unwrap();
        assert_eq!(s.x, d.x);
        assert_eq!(s.columns, d.columns);
        assert!(select_features(&d, 0, 3).is_err());
        assert!(select_features(&d, 5, 3).is_err());
        assert_eq!(
            select_features(&d, 1, 11).unwrap().columns,
            select_features(&d, 1, 11).unwrap().columns
        );
    }

    #[test]
    fn standardize_examples() {
        let x = array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]];
        let tr = Dataset::new("s", names(&["a", "c"]), x, array![0.0, 0.0, 0.0], "y").unwrap();
        let te = Dataset::new(
            "s",
            names(&["a", "c"]),
            array![[2.0, 5.0]],
            array![0.0],
            "y",
        )
        .unwrap();
        let (str_, ste, params) = standardize(&tr, &te).unwrap();
        assert_eq!(str_.x.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(str_.x.column(1).to_vec(), vec![5.0, 5.0, 5.0]);
        assert_eq!(params.degenerate, vec![false, true]);
        assert_eq!(ste.x[[0, 0]], 0.0);
    }

    proptest! {
        #[test]
        fn selection_never_duplicates(p in 1usize..30, k_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let k = 1 + ((p - 1) as f64 * k_frac) as usize;
            let idx = choose_features(p, k, seed).unwrap();
            prop_assert_eq!(idx.len(), k);
            let set: HashSet<_> = idx.iter().collect();
            prop_assert_eq!(set.len(), k);
            prop_assert!(idx.iter().all(|&i| i < p));
        }

        #[test]
        fn standardize_round_trip(rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 3), 3..20)) {
            let n = rows.len();
            let x = Array2::from_shape_fn((n, 3), |(i, j)| rows[i][j]);
            let params = ScalingParams::fit(x.view());
            let z = params.transform(x.view());
            let back = params.inverse_transform(z.view());
            for (a, b) in back.iter().zip(x.iter()) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
            for j in 0..3 {
                if !params.degenerate[j] {
                    let st = FeatureStats::from_matrix(z.view());
                    prop_assert!(st.mean[j].abs() < 1e-10);
                    prop_assert!((st.sd[j] - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}
