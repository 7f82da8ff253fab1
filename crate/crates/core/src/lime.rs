//! LIME-style local explanations for tabular regression.
//!
//! An instance is explained by sampling a neighbourhood from the training
//! marginals, weighting each sample by an exponential kernel on its
//! standardized distance to the instance, and fitting a weighted ridge
//! regression to the black box's outputs on the neighbourhood.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use crate::dataio::FeatureStats;
use crate::error::{check_dim, Error, Result};
use crate::rng;
use crate::surrogates::linear::fit_weighted_ridge;
use crate::svr::SvrModel;

/// Anything that maps feature rows to real predictions.
pub trait BlackBox: Sync {
    fn n_features(&self) -> usize;
    fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>>;
}

impl BlackBox for SvrModel {
    fn n_features(&self) -> usize {
        SvrModel::n_features(self)
    }

    fn predict_batch(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimeParams {
    pub n_samples: usize,
    /// Exponential-kernel width in standardized units.
    pub kernel_width: f64,
    pub n_features_used: usize,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl LimeParams {
    /// 5000 samples, width `0.75·√d`, all features, `λ = 1e-3`.
    pub fn for_dimension(d: usize, seed: u64) -> Self {
        LimeParams {
            n_samples: 5000,
            kernel_width: 0.75 * (d as f64).sqrt(),
            n_features_used: d.max(1),
            ridge_lambda: 1e-3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::invalid(format!(
                "LIME needs at least 10 samples, got {}",
                self.n_samples
            )));
        }
        if self.n_features_used == 0 {
            return Err(Error::invalid("LIME must use at least one feature"));
        }
        if !(self.kernel_width > 0.0) {
            return Err(Error::invalid(format!(
                "kernel width must be positive, got {}",
                self.kernel_width
            )));
        }
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::invalid("ridge penalty must be nonnegative"));
        }
        Ok(())
    }
}

/// A local linear model around one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub instance: Array1<f64>,
    /// Feature indices in the local model, ascending.
    pub selected_features: Vec<usize>,
    /// Local coefficient of each selected feature.
    pub weights: Array1<f64>,
    pub intercept: f64,
    pub local_prediction: f64,
    pub blackbox_prediction: f64,
}

impl Explanation {
    /// `intercept + Σ weights_j · instance_j` over the selected features.
    pub fn evaluate(&self, row: ArrayView1<f64>) -> f64 {
        local_value(self.intercept, &self.selected_features, &self.weights, row)
    }

    pub fn squared_error(&self) -> f64 {
        let e = self.local_prediction - self.blackbox_prediction;
        e * e
    }
}

fn local_value(
    intercept: f64,
    selected: &[usize],
    weights: &Array1<f64>,
    row: ArrayView1<f64>,
) -> f64 {
    let mut acc = intercept;
    for (k, &j) in selected.iter().enumerate() {
        acc += weights[k] * row[j];
    }
    acc
}

/// `n` rows drawn feature-wise from `Normal(mean_j, sd_j)`; row 0 is the
/// instance itself. Zero-sd features repeat their mean.
pub fn perturb(
    instance: ArrayView1<f64>,
    stats: &FeatureStats,
    n: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    check_dim(stats.dim(), instance.len())?;
    let d = instance.len();
    let mut rng = rng::rng(seed);
    let mut out = Array2::zeros((n, d));
    if n == 0 {
        return Ok(out);
    }
    out.row_mut(0).assign(&instance);
    for i in 1..n {
        for j in 0..d {
            let sd = stats.sd[j];
            out[[i, j]] = if sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                stats.mean[j] + sd * z
            } else {
                stats.mean[j]
            };
        }
    }
    Ok(out)
}

/// `exp(−‖instance − sample‖² / width²)`, floored at the smallest positive
/// double so every weight stays in `(0, 1]`.
pub fn proximity_weights(
    instance: ArrayView1<f64>,
    samples: ArrayView2<f64>,
    width: f64,
) -> Result<Array1<f64>> {
    if !(width > 0.0) {
        return Err(Error::invalid(format!(
            "kernel width must be positive, got {width}"
        )));
    }
    check_dim(instance.len(), samples.ncols())?;
    let w2 = width * width;
    Ok(samples
        .rows()
        .into_iter()
        .map(|r| {
            let d2: f64 = r
                .iter()
                .zip(instance.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (-d2 / w2).exp().max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Weighted local linear model restricted to the selected features.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub selected_features: Vec<usize>,
    pub weights: Array1<f64>,
    pub intercept: f64,
}

/// Fit the local surrogate. When fewer than all features are requested,
/// the ones with the largest |coefficient × weighted sd| in a full fit are
/// kept (ties broken toward the lower index).
pub fn fit_local_model(
    samples: ArrayView2<f64>,
    targets: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    p: &LimeParams,
) -> Result<LocalModel> {
    let (n, d) = samples.dim();
    check_dim(n, targets.len())?;
    check_dim(n, weights.len())?;
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let k = p.n_features_used.min(d);
    let selected: Vec<usize> = if k == d {
        (0..d).collect()
    } else {
        let full = fit_weighted_ridge(samples, targets, weights, p.ridge_lambda)?;
        let wsum = weights.sum();
        let mut score: Vec<(usize, f64)> = (0..d)
            .map(|j| {
                let col = samples.column(j);
                let m = col
                    .iter()
                    .zip(weights.iter())
                    .map(|(a, w)| a * w)
                    .sum::<f64>()
                    / wsum;
                let var = col
                    .iter()
                    .zip(weights.iter())
                    .map(|(a, w)| w * (a - m) * (a - m))
                    .sum::<f64>()
                    / wsum;
                (j, (full.coefficients[j] * var.sqrt()).abs())
            })
            .collect();
        score.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut s: Vec<usize> = score.into_iter().take(k).map(|(j, _)| j).collect();
        s.sort_unstable();
        s
    };
    let sub = samples.select(ndarray::Axis(1), &selected);
    let m = fit_weighted_ridge(sub.view(), targets, weights, p.ridge_lambda)?;
    Ok(LocalModel {
        selected_features: selected,
        weights: m.coefficients,
        intercept: m.intercept,
    })
}

/// Perturb, query the black box, weight and fit, for one instance.
///
/// `train_stats` describe the training features in the same coordinates as
/// `instance`; they drive both the sampling and the distance scaling.
pub fn explain_instance<M: BlackBox + ?Sized>(
    instance: ArrayView1<f64>,
    model: &M,
    train_stats: &FeatureStats,
    p: &LimeParams,
) -> Result<Explanation> {
    p.validate()?;
    check_dim(model.n_features(), instance.len())?;
    let samples = perturb(instance, train_stats, p.n_samples, p.seed)?;
    let targets = model.predict_batch(samples.view())?;

    let scale = |row: ArrayView1<f64>| -> Array1<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let sd = train_stats.sd[j];
                if sd > 0.0 {
                    (v - train_stats.mean[j]) / sd
                } else {
                    0.0
                }
            })
            .collect()
    };
    let z_instance = scale(instance);
    let mut z_samples = Array2::zeros(samples.dim());
    for (i, row) in samples.rows().into_iter().enumerate() {
        z_samples.row_mut(i).assign(&scale(row));
    }
    let w = proximity_weights(z_instance.view(), z_samples.view(), p.kernel_width)?;
    let local = fit_local_model(samples.view(), targets.view(), w.view(), p)?;
    let local_prediction = local_value(
        local.intercept,
        &local.selected_features,
        &local.weights,
        instance,
    );
    Ok(Explanation {
        instance: instance.to_owned(),
        selected_features: local.selected_features,
        weights: local.weights,
        intercept: local.intercept,
        local_prediction,
        blackbox_prediction: targets[0],
    })
}

/// Seed for the explanation of test instance `index` within a run.
pub fn instance_seed(run_seed: u64, index: usize) -> u64 {
    rng::mix(run_seed, index as u64)
}

/// Explain every row of `x`; row `i` uses `instance_seed(p.seed, i)`.
pub fn explain_all<M: BlackBox + ?Sized>(
    x: ArrayView2<f64>,
    model: &M,
    train_stats: &FeatureStats,
    p: &LimeParams,
) -> Result<Vec<Explanation>> {
    let one = |i: usize| {
        let params = LimeParams {
            seed: instance_seed(p.seed, i),
            ..*p
        };
        explain_instance(x.row(i), model, train_stats, &params)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..x.nrows()).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..x.nrows()).map(one).collect()
    }
}

/// One CSV row per explanation: index, black-box and local predictions,
/// squared error, then `feature,weight` pairs.
pub fn explanations_csv(explanations: &[Explanation], names: &[String]) -> String {
    let mut out =
        String::from("instance,blackbox_prediction,local_prediction,squared_error,features...\n");
    for (i, e) in explanations.iter().enumerate() {
        out.push_str(&format!(
            "{i},{},{},{}",
            e.blackbox_prediction,
            e.local_prediction,
            e.squared_error()
        ));
        for (k, &j) in e.selected_features.iter().enumerate() {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
            out.push_str(&format!(",{name},{}", e.weights[k]));
        }
        out.push('\n');
    }
    out
}
