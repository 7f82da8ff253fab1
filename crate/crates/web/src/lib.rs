//! Browser bindings for the fidelity benchmark. Every export returns a JSON
//! string so the page needs no generated type glue beyond `JSON.parse`.

use ndarray::{Array1, Array2};
use serde_json::{json, Value};
use surrogate_fidelity::dataio::FeatureStats;
use surrogate_fidelity::experiment::{
    read_table2, read_table3, SuiteSummary, ALPHA, REFERENCE_TABLE2, REFERENCE_TABLE3,
};
use surrogate_fidelity::lime::{explain_instance, LimeParams};
use surrogate_fidelity::metrics::rmse;
use surrogate_fidelity::surrogates::{fit_ols, fit_tree, TreeParams};
use surrogate_fidelity::svr::{fit_svr, Kernel, SvrParams};
use surrogate_fidelity::wilcoxon::{significance, wilcoxon_signed_rank};
use wasm_bindgen::prelude::*;

const GRID: usize = 200;

/// Settings for the one-dimensional curve demo.
#[derive(Debug, Clone, Copy)]
pub struct CurveSettings {
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub max_depth: usize,
    pub min_bucket: usize,
    /// Where LIME explains the black box.
    pub focus: f64,
    pub seed: u64,
}

fn column(v: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((v.len(), 1), v.to_vec()).expect("one column")
}

/// Fit an RBF SVR to points `(xs, ys)`, then a tree and a line to the SVR's
/// outputs, and explain the SVR at `focus` with LIME.
pub fn curve(xs: &[f64], ys: &[f64], s: &CurveSettings) -> Result<Value, String> {
    if xs.len() != ys.len() {
        return Err(format!("{} x values but {} y values", xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err("add at least 3 points".into());
    }
    let err = |e: surrogate_fidelity::Error| e.to_string();
    let x = column(xs);
    let y = Array1::from(ys.to_vec());
    let svr = fit_svr(
        x.view(),
        y.view(),
        &SvrParams {
            c: s.c,
            epsilon: s.epsilon,
            kernel: Kernel::Rbf { gamma: s.gamma },
            tol: 1e-3,
            max_iter: 1_000_000,
        },
    )
    .map_err(err)?;
    let black_box = svr.predict(x.view()).map_err(err)?;
    let tree = fit_tree(
        x.view(),
        black_box.view(),
        &TreeParams {
            min_split: 2 * s.min_bucket,
            min_bucket: s.min_bucket,
            max_depth: s.max_depth,
            cp: 0.0,
        },
    )
    .map_err(err)?;
    let line = fit_ols(x.view(), black_box.view()).map_err(err)?;

    let stats = FeatureStats::from_matrix(x.view());
    let params = LimeParams {
        n_samples: 2000,
        ..LimeParams::for_dimension(1, s.seed)
    };
    let focus = Array1::from(vec![s.focus]);
    let lime = explain_instance(focus.view(), &svr, &stats, &params).map_err(err)?;
    let slope = lime.weights.first().copied().unwrap_or(0.0);

    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-9);
    let grid: Vec<f64> = (0..GRID)
        .map(|i| lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (GRID - 1) as f64)
        .collect();
    let g = column(&grid);

    let tree_fit = tree.predict(x.view()).map_err(err)?;
    let line_fit = line.predict(x.view()).map_err(err)?;
    let lime_fit = x.column(0).mapv(|v| lime.intercept + slope * v);
    Ok(json!({
        "grid": grid,
        "svr": svr.predict(g.view()).map_err(err)?.to_vec(),
        "tree": tree.predict(g.view()).map_err(err)?.to_vec(),
        "mlr": line.predict(g.view()).map_err(err)?.to_vec(),
        "lime": {
            "focus": s.focus,
            "intercept": lime.intercept,
            "slope": slope,
            "local_prediction": lime.local_prediction,
            "blackbox_prediction": lime.blackbox_prediction,
        },
        "n_support": svr.n_support(),
        "n_leaves": tree.n_leaves(),
        // fidelity to the black box over the data points
        "rmse": {
            "tree": rmse(tree_fit.view(), black_box.view()).map_err(err)?,
            "mlr": rmse(line_fit.view(), black_box.view()).map_err(err)?,
            "lime_line": rmse(lime_fit.view(), black_box.view()).map_err(err)?,
        },
    }))
}

/// Parse lines of two numbers separated by whitespace, commas or semicolons.
pub fn parse_pairs(text: &str) -> Result<(Vec<f64>, Vec<f64>), String> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c.is_whitespace() || c == ',' || c == ';')
            .filter(|f| !f.is_empty())
            .collect();
        let [u, v] = fields[..] else {
            return Err(format!(
                "line {}: expected two numbers, got `{line}`",
                i + 1
            ));
        };
        let num = |f: &str| {
            f.parse::<f64>()
                .map_err(|_| format!("line {}: `{f}` is not a number", i + 1))
        };
        a.push(num(u)?);
        b.push(num(v)?);
    }
    Ok((a, b))
}

/// Paired signed-rank test on pasted pairs.
pub fn wilcoxon_text(text: &str) -> Result<Value, String> {
    let (a, b) = parse_pairs(text)?;
    let r = wilcoxon_signed_rank(&a, &b).map_err(|e| e.to_string())?;
    Ok(json!({
        "n_pairs": a.len(),
        "n_effective": r.n_effective,
        "v": r.v_statistic,
        "p": r.p_two_sided,
        "method": r.method.to_string(),
        "significant": significance(&r, ALPHA),
    }))
}

/// Recompute the suite statistics from Table 2 and Table 3 CSV text.
pub fn replay_text(table2: &str, table3: &str) -> Result<Value, String> {
    let err = |e: surrogate_fidelity::Error| e.to_string();
    let summary = SuiteSummary::from_tables(
        read_table2(table2).map_err(err)?,
        read_table3(table3).map_err(err)?,
    )
    .map_err(err)?;
    let s = &summary.stats;
    let comparisons: Vec<Value> = s
        .comparisons()
        .iter()
        .map(|c| json!({ "name": c.name, "summary": c.summary() }))
        .collect();
    Ok(json!({
        "runs": summary.table2.len(),
        "tree_vs_lime": s.win_rates.tree_vs_lime.to_string(),
        "mlr_vs_lime": s.win_rates.mlr_vs_lime.to_string(),
        "tree_vs_mlr": s.win_rates.tree_vs_mlr.to_string(),
        "pct1_ge_pct2": s.pct1_ge_pct2.to_string(),
        "comparisons": comparisons,
        "percentage_mismatches": s.percentage_mismatches,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = fitCurve)]
#[allow(clippy::too_many_arguments)]
pub fn fit_curve(
    xs: &[f64],
    ys: &[f64],
    c: f64,
    epsilon: f64,
    gamma: f64,
    max_depth: usize,
    min_bucket: usize,
    focus: f64,
) -> Result<String, JsValue> {
    let s = CurveSettings {
        c,
        epsilon,
        gamma,
        max_depth,
        min_bucket,
        focus,
        seed: 1,
    };
    to_js(curve(xs, ys, &s))
}

#[wasm_bindgen(js_name = wilcoxonPairs)]
pub fn wilcoxon_pairs(text: &str) -> Result<String, JsValue> {
    to_js(wilcoxon_text(text))
}

#[wasm_bindgen]
pub fn replay(table2: &str, table3: &str) -> Result<String, JsValue> {
    to_js(replay_text(table2, table3))
}

#[wasm_bindgen(js_name = referenceTable2)]
pub fn reference_table2() -> String {
    REFERENCE_TABLE2.to_string()
}

#[wasm_bindgen(js_name = referenceTable3)]
pub fn reference_table3() -> String {
    REFERENCE_TABLE3.to_string()
}
