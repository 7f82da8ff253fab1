//! Epsilon-support vector regression, the black box every explainer
//! approximates.
//!
//! The dual is solved with sequential minimal optimization over the `2n`
//! variables `(α, α*)`, using second-order working-set selection. With
//! `s_t = +1` for `α` and `s_t = −1` for `α*`, the problem is
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  Σ s_t a_t = 0,  0 ≤ a_t ≤ C
//! Q_tu = s_t s_u K(x_t, x_u),  p = (ε − y, ε + y)
//! ```
//!
//! and the fitted function is `f(x) = Σ β_i K(x_i, x) + b` with
//! `β_i = α_i − α*_i`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(Error::invalid(
                format!("rbf gamma must be positive, got {gamma}"),
            )),
            _ => Ok(()),
        }
    }

    /// `exp(−γ‖u − v‖²)` or `u·v`.
    pub fn eval(&self, u: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<f64> {
        check_dim(u.len(), v.len())?;
        Ok(self.eval_slices(&u.to_vec(), &v.to_vec()))
    }

    #[inline]
    pub(crate) fn eval_slices(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => u.iter().zip(v).map(|(a, b)| a * b).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: Kernel,
    /// Maximal KKT violation accepted at convergence.
    pub tol: f64,
    pub max_iter: usize,
}

impl SvrParams {
    /// libsvm-style defaults: RBF with `γ = 1/d`, `C = 1`, `ε = 0.1`.
    pub fn for_dimension(d: usize) -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            kernel: Kernel::Rbf {
                gamma: 1.0 / d.max(1) as f64,
            },
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be nonnegative, got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        self.kernel.validate()
    }
}

/// A fitted epsilon-SVR.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    /// Rows of the training matrix with nonzero `β`.
    pub support_vectors: Array2<f64>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// Signed dual coefficients `α_i − α*_i` of the support vectors.
    pub beta: Array1<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    /// Value of the dual objective `½ aᵀQa + pᵀa` at the solution.
    pub dual_objective: f64,
    pub iterations: usize,
    n_features: usize,
}

const TAU: f64 = 1e-12;

struct Smo<'a> {
    k: &'a [f64],
    n: usize,
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
}

impl Smo<'_> {
    #[inline]
    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    fn kern(&self, t: usize, u: usize) -> f64 {
        self.k[(t % self.n) * self.n + (u % self.n)]
    }

    #[inline]
    fn q(&self, t: usize, u: usize) -> f64 {
        self.sign(t) * self.sign(u) * self.kern(t, u)
    }

    fn at_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c
    }

    fn at_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    /// Second-order working-set selection. Returns `None` at optimality,
    /// together with the current maximal violation.
    fn select(&self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let l = 2 * self.n;
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if self.sign(t) > 0.0 {
                if !self.at_upper(t) && -self.grad[t] >= gmax {
                    gmax = -self.grad[t];
                    i_sel = Some(t);
                }
            } else if !self.at_lower(t) && self.grad[t] >= gmax {
                gmax = self.grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            return (None, 0.0);
        };

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        let qd_i = self.kern(i, i);
        for t in 0..l {
            if self.sign(t) > 0.0 {
                if !self.at_lower(t) {
                    let grad_diff = gmax + self.grad[t];
                    if self.grad[t] >= gmax2 {
                        gmax2 = self.grad[t];
                    }
                    if grad_diff > 0.0 {
                        let quad = qd_i + self.kern(t, t) - 2.0 * self.sign(i) * self.q(i, t);
                        let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                        if obj <= best {
                            best = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            } else if !self.at_upper(t) {
                let grad_diff = gmax - self.grad[t];
                if -self.grad[t] >= gmax2 {
                    gmax2 = -self.grad[t];
                }
                if grad_diff > 0.0 {
                    let quad = qd_i + self.kern(t, t) + 2.0 * self.sign(i) * self.q(i, t);
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        match j_sel {
            Some(j) if violation >= tol => (Some((i, j)), violation),
            _ => (None, violation.max(0.0)),
        }
    }

    /// Analytic solution of the two-variable subproblem.
    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qij = self.q(i, j);
        let (qii, qjj) = (self.kern(i, i), self.kern(j, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let quad = qii + qjj + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = qii + qjj - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.n {
            self.grad[t] += self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    /// Offset `b = −ρ`, averaged over free variables or the midpoint of the
    /// feasible interval when none are free.
    fn bias(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum_free = 0.0;
        let mut n_free = 0usize;
        for t in 0..2 * self.n {
            let s = self.sign(t);
            let yg = s * self.grad[t];
            if self.at_upper(t) {
                if s < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.at_lower(t) {
                if s > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        let rho = if n_free > 0 {
            sum_free / n_free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }
}

/// Gram matrix of the rows of `x`, row-major.
fn gram(x: ArrayView2<f64>, kernel: Kernel) -> Vec<f64> {
    let n = x.nrows();
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval_slices(&rows[i], &rows[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Fit an epsilon-SVR to `(x, y)`.
pub fn fit_svr(x: ArrayView2<f64>, y: ArrayView1<f64>, p: &SvrParams) -> Result<SvrModel> {
    p.validate()?;
    check_dim(x.nrows(), y.len())?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot fit an SVR on zero rows"));
    }
    let k = gram(x, p.kernel);
    let mut grad = Vec::with_capacity(2 * n);
    grad.extend(y.iter().map(|&yi| p.epsilon - yi));
    grad.extend(y.iter().map(|&yi| p.epsilon + yi));
    let p_lin = grad.clone();
    let mut smo = Smo {
        k: &k,
        n,
        c: p.c,
        alpha: vec![0.0; 2 * n],
        grad,
    };

    let mut iterations = 0;
    loop {
        let (pair, violation) = smo.select(p.tol);
        let Some((i, j)) = pair else { break };
        if iterations >= p.max_iter {
            return Err(Error::Convergence {
                iterations,
                violation,
            });
        }
        smo.update(i, j);
        iterations += 1;
    }

    let bias = smo.bias();
    let dual_objective = 0.5
        * smo
            .alpha
            .iter()
            .zip(smo.grad.iter().zip(&p_lin))
            .map(|(a, (g, pl))| a * (g + pl))
            .sum::<f64>();

    let mut support_indices = Vec::new();
    let mut beta = Vec::new();
    for i in 0..n {
        let b = smo.alpha[i] - smo.alpha[i + n];
        if b != 0.0 {
            support_indices.push(i);
            beta.push(b);
        }
    }
    Ok(SvrModel {
        support_vectors: x.select(Axis(0), &support_indices),
        support_indices,
        beta: Array1::from(beta),
        bias,
        kernel: p.kernel,
        dual_objective,
        iterations,
        n_features: x.ncols(),
    })
}

impl SvrModel {
    /// A model with no support vectors: `f(x) = bias` everywhere.
    pub fn constant(bias: f64, n_features: usize) -> Self {
        SvrModel {
            support_vectors: Array2::zeros((0, n_features)),
            support_indices: Vec::new(),
            beta: Array1::zeros(0),
            bias,
            kernel: Kernel::Linear,
            dual_objective: 0.0,
            iterations: 0,
            n_features,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_support(&self) -> usize {
        self.beta.len()
    }

    #[inline]
    fn predict_slice(&self, row: &[f64]) -> f64 {
        let mut acc = self.bias;
        for (sv, b) in self
            .support_vectors
            .rows()
            .into_iter()
            .zip(self.beta.iter())
        {
            let sv = sv.as_slice().expect("support vectors are contiguous");
            acc += b * self.kernel.eval_slices(sv, row);
        }
        acc
    }

    pub fn predict_row(&self, row: ArrayView1<f64>) -> Result<f64> {
        check_dim(self.n_features, row.len())?;
        Ok(self.predict_slice(&row.to_vec()))
    }

    /// `Σ β_i K(x_i, x) + b` for each row of `x`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        check_dim(self.n_features, x.ncols())?;
        let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
        #[cfg(feature = "parallel")]
        let out: Vec<f64> = {
            use rayon::prelude::*;
            rows.par_iter().map(|r| self.predict_slice(r)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let out: Vec<f64> = rows.iter().map(|r| self.predict_slice(r)).collect();
        Ok(Array1::from(out))
    }

    /// Audit dump: support vectors, coefficients, bias and kernel as JSON.
    pub fn to_json(&self) -> String {
        let dump = SvrDump {
            kernel: self.kernel,
            bias: self.bias,
            n_features: self.n_features,
            support_indices: self.support_indices.clone(),
            beta: self.beta.to_vec(),
            support_vectors: self
                .support_vectors
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            dual_objective: self.dual_objective,
        };
        serde_json::to_string_pretty(&dump).expect("model dump serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: SvrDump = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad model dump: {e}")))?;
        let n_sv = dump.beta.len();
        if dump.support_vectors.len() != n_sv || dump.support_indices.len() != n_sv {
            return Err(Error::invalid(
                "model dump has inconsistent support-vector counts",
            ));
        }
        let flat: Vec<f64> = dump.support_vectors.into_iter().flatten().collect();
        let support_vectors = Array2::from_shape_vec((n_sv, dump.n_features), flat)
            .map_err(|e| Error::invalid(format!("bad support-vector matrix: {e}")))?;
        Ok(SvrModel {
            support_vectors,
            support_indices: dump.support_indices,
            beta: Array1::from(dump.beta),
            bias: dump.bias,
            kernel: dump.kernel,
            dual_objective: dump.dual_objective,
            iterations: 0,
            n_features: dump.n_features,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct SvrDump {
    kernel: Kernel,
    bias: f64,
    n_features: usize,
    support_indices: Vec<usize>,
    beta: Vec<f64>,
    support_vectors: Vec<Vec<f64>>,
    dual_objective: f64,
}
