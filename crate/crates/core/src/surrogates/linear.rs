//! Ordinary and weighted-ridge linear regression.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{check_dim, Error, Result};

/// `intercept + x · coefficients`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinModel {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
    /// The centered design had numerically dependent columns; the
    /// minimum-norm solution was returned.
    pub rank_deficient: bool,
}

impl LinModel {
    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        check_dim(self.coefficients.len(), x.ncols())?;
        Ok(x.dot(&self.coefficients) + self.intercept)
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        check_dim(self.coefficients.len(), row.len())?;
        Ok(self.intercept
            + row
                .iter()
                .zip(self.coefficients.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    /// Per-feature terms `coefficient_j · x_j`.
    pub fn contributions(&self, row: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.coefficients.len(), row.len())?;
        Ok(row
            .iter()
            .zip(self.coefficients.iter())
            .map(|(a, b)| a * b)
            .collect())
    }
}

/// Minimum-norm least squares via SVD, with numerically zero singular
/// values truncated. Returns the solution and whether truncation happened.
fn lstsq(a: DMatrix<f64>, b: DVector<f64>) -> (DVector<f64>, bool) {
    let (rows, cols) = a.shape();
    if cols == 0 {
        return (DVector::zeros(0), false);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = rows.max(cols) as f64 * smax * f64::EPSILON;
    let rank_deficient = svd.singular_values.iter().filter(|&&s| s > eps).count() < cols;
    let sol = if smax == 0.0 {
        DVector::zeros(cols)
    } else {
        svd.solve(&b, eps).expect("SVD computed with both factors")
    };
    (sol, rank_deficient)
}

/// Ordinary least squares with an intercept.
///
/// Columns are centered and solved by SVD, so the intercept is never
/// shrunk and collinear designs get the minimum-norm coefficient vector.
pub fn fit_ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<LinModel> {
    let w = Array1::ones(y.len());
    fit_weighted_ridge(x, y, w.view(), 0.0)
}

/// Minimizes `Σ w_i (y_i − a − x_i·c)² + λ‖c‖²` with the intercept `a`
/// unpenalized.
pub fn fit_weighted_ridge(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    w: ArrayView1<f64>,
    lambda: f64,
) -> Result<LinModel> {
    let (n, d) = x.dim();
    check_dim(n, y.len())?;
    check_dim(n, w.len())?;
    if n == 0 {
        return Err(Error::invalid("cannot fit a linear model on zero rows"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!(
            "ridge penalty must be nonnegative, got {lambda}"
        )));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let wsum: f64 = w.sum();
    if !(wsum > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let xbar: Vec<f64> = (0..d)
        .map(|j| {
            x.column(j)
                .iter()
                .zip(w.iter())
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / wsum
        })
        .collect();
    let ybar = y.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() / wsum;

    let extra = if lambda > 0.0 { d } else { 0 };
    let mut a = DMatrix::zeros(n + extra, d);
    let mut b = DVector::zeros(n + extra);
    for i in 0..n {
        let sw = w[i].sqrt();
        for j in 0..d {
            a[(i, j)] = sw * (x[[i, j]] - xbar[j]);
        }
        b[i] = sw * (y[i] - ybar);
    }
    let sl = lambda.sqrt();
    for j in 0..extra {
        a[(n + j, j)] = sl;
    }
    let (coef, rank_deficient) = lstsq(a, b);
    let coefficients = Array1::from_iter(coef.iter().copied());
    let intercept = ybar
        - coefficients
            .iter()
            .zip(&xbar)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(LinModel {
        coefficients,
        intercept,
        rank_deficient: rank_deficient && lambda == 0.0,
    })
}
