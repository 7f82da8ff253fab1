use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lime::explanations_csv;
use crate::metrics::{self, round2, FidelityReport, LocalWinCounts, WinRate, WinRates};
use crate::surrogates::importance_csv;
use crate::wilcoxon::{significance, wilcoxon_signed_rank, WilcoxonResult};

use super::{RunOutcome, ALPHA};

pub const TABLE2_HEADER: [&str; 5] = [
    "Dataset",
    "Number of variables used",
    "RMSE using multi-linear regression",
    "RMSE using Decision trees",
    "RMSE using LIME",
];

pub const TABLE3_HEADER: [&str; 6] = [
    "Dataset",
    "Number of test dataset records over which decision trees squared error value is less than of LIME(x1)",
    "Number of test dataset records over which multi-linear regression squared error value is less than of LIME(x2)",
    "Total number of test dataset records(T)",
    "x1/T*100",
    "x2/T*100",
];

/// Published global fidelity results.
pub const REFERENCE_TABLE2: &str = include_str!("../../../../data/reference_table2.csv");
/// Published local win counts.
pub const REFERENCE_TABLE3: &str = include_str!("../../../../data/reference_table3.csv");

/// Display name used in table rows.
pub fn display_name(dataset: &str) -> &str {
    match dataset {
        "wine" => "Wine",
        "boston" => "Boston Housing",
        "yacht" => "Yacht hydrodynamics",
        "computer_hardware" => "Computer Hardware",
        "auto" => "Auto",
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Row {
    pub dataset: String,
    pub n_variables: usize,
    pub rmse_mlr: f64,
    pub rmse_tree: f64,
    pub rmse_lime: f64,
}

impl Table2Row {
    pub fn fidelity(&self) -> FidelityReport {
        FidelityReport {
            rmse_mlr: self.rmse_mlr,
            rmse_tree: self.rmse_tree,
            rmse_lime: self.rmse_lime,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table3Row {
    pub dataset: String,
    pub counts: LocalWinCounts,
    /// Percentages as stored in the table (full precision for live runs).
    pub pct1: f64,
    pub pct2: f64,
}

impl Table3Row {
    pub fn from_counts(dataset: String, counts: LocalWinCounts) -> Self {
        Table3Row {
            dataset,
            pct1: counts.pct1(),
            pct2: counts.pct2(),
            counts,
        }
    }

    /// Cells whose stored percentage, at 2 decimals, is neither the rounded
    /// nor the truncated value implied by the counts.
    pub fn percentage_mismatches(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (label, stored, computed) in [
            ("x1/T*100", self.pct1, self.counts.pct1()),
            ("x2/T*100", self.pct2, self.counts.pct2()),
        ] {
            if !displays_as(stored, computed) {
                out.push(format!(
                    "{} {label}: table has {stored}, counts give {:.2}",
                    self.dataset, computed
                ));
            }
        }
        out
    }
}

/// Whether `stored` shows `exact` to 2 decimals, rounded or truncated.
pub fn displays_as(stored: f64, exact: f64) -> bool {
    let shown = round2(stored);
    let truncated = (exact * 100.0 + 1e-9).floor() / 100.0;
    (shown - round2(exact)).abs() < 1e-9 || (shown - truncated).abs() < 1e-9
}

/// A paired Wilcoxon comparison, or why it could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name: &'static str,
    pub result: std::result::Result<WilcoxonResult, String>,
}

impl Comparison {
    fn new(name: &'static str, a: &[f64], b: &[f64]) -> Self {
        Comparison {
            name,
            result: wilcoxon_signed_rank(a, b).map_err(|e| e.to_string()),
        }
    }

    pub fn significant(&self) -> Option<bool> {
        self.result.as_ref().ok().map(|r| significance(r, ALPHA))
    }

    pub fn summary(&self) -> String {
        match &self.result {
            Ok(r) => r.summary(ALPHA),
            Err(e) => format!("not computed: {e}"),
        }
    }
}

/// Every cross-run statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteStatistics {
    pub win_rates: WinRates,
    /// Global RMSE columns.
    pub tree_vs_lime: Comparison,
    pub mlr_vs_lime: Comparison,
    pub tree_vs_mlr: Comparison,
    /// Per-run local percentages: each surrogate's share against LIME's share.
    pub local_tree_vs_lime: Comparison,
    pub local_mlr_vs_lime: Comparison,
    pub local_tree_vs_mlr: Comparison,
    /// Runs with `pct1 ≥ pct2`.
    pub pct1_ge_pct2: WinRate,
    pub percentage_mismatches: Vec<String>,
}

impl SuiteStatistics {
    pub fn comparisons(&self) -> [&Comparison; 6] {
        [
            &self.tree_vs_lime,
            &self.mlr_vs_lime,
            &self.tree_vs_mlr,
            &self.local_tree_vs_lime,
            &self.local_mlr_vs_lime,
            &self.local_tree_vs_mlr,
        ]
    }
}

/// Aggregate Table 2 and Table 3 rows.
pub fn summarize(table2: &[Table2Row], table3: &[Table3Row]) -> Result<SuiteStatistics> {
    if table2.len() != table3.len() {
        return Err(Error::invalid(format!(
            "tables disagree on run count: {} vs {}",
            table2.len(),
            table3.len()
        )));
    }
    let fid: Vec<FidelityReport> = table2.iter().map(Table2Row::fidelity).collect();
    let win_rates = metrics::win_rate(&fid)?;
    let col = |f: fn(&FidelityReport) -> f64| fid.iter().map(f).collect::<Vec<f64>>();
    let (mlr, tree, lime) = (
        col(|r| r.rmse_mlr),
        col(|r| r.rmse_tree),
        col(|r| r.rmse_lime),
    );
    let pct1: Vec<f64> = table3.iter().map(|r| r.counts.pct1()).collect();
    let pct2: Vec<f64> = table3.iter().map(|r| r.counts.pct2()).collect();
    let rest = |v: &[f64]| v.iter().map(|p| 100.0 - p).collect::<Vec<f64>>();

    Ok(SuiteStatistics {
        win_rates,
        tree_vs_lime: Comparison::new("tree vs LIME (RMSE)", &tree, &lime),
        mlr_vs_lime: Comparison::new("MLR vs LIME (RMSE)", &mlr, &lime),
        tree_vs_mlr: Comparison::new("tree vs MLR (RMSE)", &tree, &mlr),
        local_tree_vs_lime: Comparison::new("tree vs LIME (local %)", &pct1, &rest(&pct1)),
        local_mlr_vs_lime: Comparison::new("MLR vs LIME (local %)", &pct2, &rest(&pct2)),
        local_tree_vs_mlr: Comparison::new("tree vs MLR (local %)", &pct1, &pct2),
        pct1_ge_pct2: WinRate {
            wins: pct1.iter().zip(&pct2).filter(|(a, b)| a >= b).count(),
            total: table3.len(),
        },
        percentage_mismatches: table3
            .iter()
            .flat_map(Table3Row::percentage_mismatches)
            .collect(),
    })
}

/// Runs plus their tables and statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    /// Every attempted run in order; empty in replay mode.
    pub outcomes: Vec<RunOutcome>,
    pub table2: Vec<Table2Row>,
    pub table3: Vec<Table3Row>,
    pub stats: SuiteStatistics,
}

impl SuiteSummary {
    pub(crate) fn from_outcomes(outcomes: Vec<RunOutcome>) -> Result<Self> {
        let done: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        if done.is_empty() {
            let first = outcomes
                .iter()
                .find_map(|o| o.as_ref().err())
                .map(|f| f.message.clone())
                .unwrap_or_default();
            return Err(Error::invalid(format!(
                "no run completed; first failure: {first}"
            )));
        }
        let table2: Vec<Table2Row> = done.iter().map(|r| r.table2_row()).collect();
        let table3: Vec<Table3Row> = done.iter().map(|r| r.table3_row()).collect();
        let stats = summarize(&table2, &table3)?;
        Ok(SuiteSummary {
            outcomes,
            table2,
            table3,
            stats,
        })
    }

    pub fn from_tables(table2: Vec<Table2Row>, table3: Vec<Table3Row>) -> Result<Self> {
        let stats = summarize(&table2, &table3)?;
        Ok(SuiteSummary {
            outcomes: Vec::new(),
            table2,
            table3,
            stats,
        })
    }

    pub fn n_failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_err()).count()
    }

    /// Completed runs whose black box did not beat the direct linear model.
    pub fn gate_failures(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .filter_map(|o| o.as_ref().ok())
            .filter(|r| !r.gate_passed)
            .map(|r| r.config.id())
            .collect()
    }

    /// Plain-text statistics block.
    pub fn report(&self) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "runs: {}", self.table2.len());
        let _ = writeln!(out, "tree RMSE < LIME RMSE: {}", s.win_rates.tree_vs_lime);
        let _ = writeln!(out, "MLR RMSE < LIME RMSE: {}", s.win_rates.mlr_vs_lime);
        let _ = writeln!(out, "tree RMSE < MLR RMSE: {}", s.win_rates.tree_vs_mlr);
        let _ = writeln!(out, "x1/T >= x2/T: {}", s.pct1_ge_pct2);
        for c in s.comparisons() {
            let _ = writeln!(out, "{}: {}", c.name, c.summary());
        }
        for m in &s.percentage_mismatches {
            let _ = writeln!(out, "warning: {m}");
        }
        if !self.outcomes.is_empty() {
            for id in self.gate_failures() {
                let _ = writeln!(
                    out,
                    "warning: {id} failed the validity gate (MLR RMSE <= SVR RMSE)"
                );
            }
            for f in self.outcomes.iter().filter_map(|o| o.as_ref().err()) {
                let _ = writeln!(out, "failed: {}: {}", f.config.id(), f.message);
            }
        }
        out
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedTable(msg.into())
}

fn read_records(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = rdr.headers().map_err(|e| malformed(e.to_string()))?.clone();
    if found.len() != header.len() || found.iter().zip(header).any(|(a, b)| a != *b) {
        return Err(malformed(format!(
            "expected header `{}`, got `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| malformed(format!("row {}: {e}", i + 1)))?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }
    Ok(rows)
}

fn cell<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    row: usize,
    col: &str,
) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse::<T>()
        .map_err(|_| malformed(format!("row {row}, column `{col}`: cannot parse `{raw}`")))
}

pub fn read_table2(text: &str) -> Result<Vec<Table2Row>> {
    read_records(text, &TABLE2_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let row = Table2Row {
                dataset: r[0].to_string(),
                n_variables: cell(r, 1, i + 1, TABLE2_HEADER[1])?,
                rmse_mlr: cell(r, 2, i + 1, TABLE2_HEADER[2])?,
                rmse_tree: cell(r, 3, i + 1, TABLE2_HEADER[3])?,
                rmse_lime: cell(r, 4, i + 1, TABLE2_HEADER[4])?,
            };
            let f = row.fidelity();
            if [f.rmse_mlr, f.rmse_tree, f.rmse_lime]
                .iter()
                .any(|v| !(v.is_finite() && *v >= 0.0))
            {
                return Err(malformed(format!(
                    "row {}: RMSE must be finite and nonnegative",
                    i + 1
                )));
            }
            Ok(row)
        })
        .collect()
}

pub fn read_table3(text: &str) -> Result<Vec<Table3Row>> {
    read_records(text, &TABLE3_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x1: usize = cell(r, 1, i + 1, TABLE3_HEADER[1])?;
            let x2: usize = cell(r, 2, i + 1, TABLE3_HEADER[2])?;
            let t: usize = cell(r, 3, i + 1, TABLE3_HEADER[3])?;
            let counts = LocalWinCounts::new(x1, x2, t)
                .map_err(|e| malformed(format!("row {}: {e}", i + 1)))?;
            Ok(Table3Row {
                dataset: r[0].to_string(),
                counts,
                pct1: cell(r, 4, i + 1, TABLE3_HEADER[4])?,
                pct2: cell(r, 5, i + 1, TABLE3_HEADER[5])?,
            })
        })
        .collect()
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Recompute every statistic from Table 2 / Table 3 CSV files without
/// fitting any model.
pub fn replay_tables(table2: &Path, table3: &Path) -> Result<SuiteSummary> {
    SuiteSummary::from_tables(
        read_table2(&read_file(table2)?)?,
        read_table3(&read_file(table3)?)?,
    )
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::invalid(format!("csv encoding: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn table2_csv(rows: &[Table2Row]) -> Result<String> {
    csv_text(
        &TABLE2_HEADER,
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.n_variables.to_string(),
                r.rmse_mlr.to_string(),
                r.rmse_tree.to_string(),
                r.rmse_lime.to_string(),
            ]
        }),
    )
}

pub fn table3_csv(rows: &[Table3Row]) -> Result<String> {
    csv_text(
        &TABLE3_HEADER,
        rows.iter().map(|r| {
            vec![
                r.dataset.clone(),
                r.counts.x1.to_string(),
                r.counts.x2.to_string(),
                r.counts.total.to_string(),
                r.pct1.to_string(),
                r.pct2.to_string(),
            ]
        }),
    )
}

fn runs_csv(outcomes: &[RunOutcome]) -> Result<String> {
    let header = [
        "run",
        "dataset",
        "n_features",
        "seed",
        "status",
        "stage",
        "message",
        "features",
        "n_train",
        "n_test",
        "n_support_vectors",
        "direct_rmse_mlr",
        "direct_rmse_svr",
        "gate_passed",
        "rmse_mlr",
        "rmse_tree",
        "rmse_lime",
        "x1",
        "x2",
        "T",
    ];
    csv_text(
        &header,
        outcomes.iter().map(|o| match o {
            Ok(r) => vec![
                r.config.id(),
                r.config.source.schema.name.clone(),
                r.config.n_features.to_string(),
                r.config.seed.to_string(),
                "ok".into(),
                String::new(),
                String::new(),
                r.feature_names.join(" "),
                r.n_train.to_string(),
                r.n_test.to_string(),
                r.n_support_vectors.to_string(),
                r.direct_rmse_mlr.to_string(),
                r.direct_rmse_svr.to_string(),
                r.gate_passed.to_string(),
                r.fidelity.rmse_mlr.to_string(),
                r.fidelity.rmse_tree.to_string(),
                r.fidelity.rmse_lime.to_string(),
                r.local.x1.to_string(),
                r.local.x2.to_string(),
                r.local.total.to_string(),
            ],
            Err(f) => {
                let mut v = vec![
                    f.config.id(),
                    f.config.source.schema.name.clone(),
                    f.config.n_features.to_string(),
                    f.config.seed.to_string(),
                    "failed".into(),
                    f.stage.unwrap_or("").to_string(),
                    f.message.clone(),
                ];
                v.resize(header.len(), String::new());
                v
            }
        }),
    )
}

fn summary_csv(s: &SuiteStatistics) -> Result<String> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (name, w) in [
        ("tree_rmse_lt_lime", s.win_rates.tree_vs_lime),
        ("mlr_rmse_lt_lime", s.win_rates.mlr_vs_lime),
        ("tree_rmse_lt_mlr", s.win_rates.tree_vs_mlr),
        ("pct1_ge_pct2", s.pct1_ge_pct2),
    ] {
        rows.push(vec![
            "win_rate".into(),
            name.into(),
            w.wins.to_string(),
            w.total.to_string(),
            w.fraction().to_string(),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    for c in s.comparisons() {
        rows.push(match &c.result {
            Ok(r) => vec![
                "wilcoxon".into(),
                c.name.into(),
                r.n_effective.to_string(),
                r.v_statistic.to_string(),
                r.p_two_sided.to_string(),
                r.method.to_string(),
                significance(r, ALPHA).to_string(),
                String::new(),
            ],
            Err(e) => {
                let mut v = vec!["wilcoxon".into(), c.name.into()];
                v.resize(7, String::new());
                v.push(e.clone());
                v
            }
        });
    }
    csv_text(
        &[
            "kind",
            "name",
            "a",
            "b",
            "value",
            "method",
            "significant",
            "error",
        ],
        rows,
    )
}

fn markdown(summary: &SuiteSummary) -> String {
    let mut out = String::from("# Surrogate fidelity benchmark\n\n## Global fidelity (RMSE)\n\n");
    let _ = writeln!(out, "| {} |", TABLE2_HEADER.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(TABLE2_HEADER.len()));
    for r in &summary.table2 {
        let _ = writeln!(
            out,
            "| {} | {} | {:.3} | {:.3} | {:.3} |",
            r.dataset, r.n_variables, r.rmse_mlr, r.rmse_tree, r.rmse_lime
        );
    }
    out.push_str("\n## Local predictions\n\n");
    let _ = writeln!(out, "| {} |", TABLE3_HEADER.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(TABLE3_HEADER.len()));
    for r in &summary.table3 {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.2} | {:.2} |",
            r.dataset, r.counts.x1, r.counts.x2, r.counts.total, r.pct1, r.pct2
        );
    }
    out.push_str("\n## Statistics\n\n```\n");
    out.push_str(&summary.report());
    out.push_str("```\n");
    let deviations: Vec<String> = summary
        .outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .filter(|r| !r.load_report.deviations.is_empty())
        .map(|r| {
            format!(
                "- {}: {}",
                r.config.id(),
                r.load_report.deviations.join("; ")
            )
        })
        .collect();
    if !deviations.is_empty() {
        out.push_str("\n## Data deviations\n\n");
        out.push_str(&deviations.join("\n"));
        out.push('\n');
    }
    out
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

/// Write tables, statistics, a Markdown report and per-run artifacts to `dir`.
pub fn write_outputs(summary: &SuiteSummary, dir: &Path) -> Result<()> {
    let runs_dir = dir.join("runs");
    fs::create_dir_all(&runs_dir).map_err(|source| Error::Io {
        path: runs_dir.clone(),
        source,
    })?;
    write(dir, "table2.csv", &table2_csv(&summary.table2)?)?;
    write(dir, "table3.csv", &table3_csv(&summary.table3)?)?;
    write(dir, "summary.csv", &summary_csv(&summary.stats)?)?;
    write(dir, "report.md", &markdown(summary))?;
    if !summary.outcomes.is_empty() {
        write(dir, "runs.csv", &runs_csv(&summary.outcomes)?)?;
    }
    for r in summary.outcomes.iter().filter_map(|o| o.as_ref().ok()) {
        let id = r.config.id();
        let a = &r.artifacts;
        write(
            &runs_dir,
            &format!("{id}_lime.csv"),
            &explanations_csv(&a.explanations, &r.feature_names),
        )?;
        write(
            &runs_dir,
            &format!("{id}_importance.csv"),
            &importance_csv(&a.importance, &r.feature_names),
        )?;
        let rules: String = a.rules.iter().map(|rule| format!("{rule}\n")).collect();
        write(&runs_dir, &format!("{id}_rules.txt"), &rules)?;
    }
    Ok(())
}
