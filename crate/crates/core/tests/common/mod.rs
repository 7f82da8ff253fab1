//! Independent reference implementations used to check the library.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(lo..hi))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| rng.random_range(lo..hi))
}

// ---------------------------------------------------------------------------
// SVR dual by accelerated projected gradient

/// Objective of the epsilon-SVR dual in `β = α − α*` form at a point where
/// `α·α* = 0`: `½βᵀKβ + ε‖β‖₁ − yᵀβ`.
pub fn svr_dual_objective(k: &Array2<f64>, y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * k[[i, j]] * beta[j];
        }
    }
    0.5 * quad + eps * beta.iter().map(|b| b.abs()).sum::<f64>()
        - y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

/// Euclidean projection onto `{z ∈ [0, C]^{2n} : Σ z_i − Σ z_{n+i} = 0}`,
/// found by bisection on the hyperplane multiplier.
fn project(v: &[f64], n: usize, c: f64) -> Vec<f64> {
    let sign = |i: usize| if i < n { 1.0 } else { -1.0 };
    let at = |mu: f64| -> (Vec<f64>, f64) {
        let z: Vec<f64> = v
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - mu * sign(i)).clamp(0.0, c))
            .collect();
        let s = z.iter().enumerate().map(|(i, &x)| sign(i) * x).sum();
        (z, s)
    };
    // s(mu) is nonincreasing in mu
    let (mut lo, mut hi) = (-1.0, 1.0);
    while at(lo).1 < 0.0 {
        lo *= 2.0;
    }
    while at(hi).1 > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + lo.abs()) {
            break;
        }
    }
    at(0.5 * (lo + hi)).0
}

fn largest_eigenvalue(k: &Array2<f64>) -> f64 {
    let n = k.nrows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[[i, j]] * v[j]).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    lambda
}

/// Minimize the 2n-variable SVR dual with FISTA (with adaptive restart)
/// and return `β = α − α*`.
pub fn svr_dual_oracle(k: &Array2<f64>, y: &[f64], c: f64, eps: f64, iters: usize) -> Vec<f64> {
    let n = y.len();
    // Hessian [[K, −K], [−K, K]] has spectral norm 2·λmax(K)
    let l = 2.0 * largest_eigenvalue(k) * 1.01 + 1e-12;
    let grad = |z: &[f64]| -> Vec<f64> {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k[[i, j]] * beta[j]).sum())
            .collect();
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            g[i] = kb[i] + eps - y[i];
            g[n + i] = -kb[i] + eps + y[i];
        }
        g
    };
    let obj = |z: &[f64]| {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let sum_a: f64 = z.iter().sum();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += beta[i] * k[[i, j]] * beta[j];
            }
        }
        0.5 * quad + eps * sum_a - y.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
    };
    let mut x = vec![0.0; 2 * n];
    let mut yk = x.clone();
    let mut t = 1.0f64;
    let mut f_prev = obj(&x);
    // iterations in a row without a meaningful decrease
    let mut stalled = 0;
    for _ in 0..iters {
        let g = grad(&yk);
        let step: Vec<f64> = yk.iter().zip(&g).map(|(a, b)| a - b / l).collect();
        let x_new = project(&step, n, c);
        let f_new = obj(&x_new);
        if f_prev - f_new <= 1e-15 * (1.0 + f_prev.abs()) {
            stalled += 1;
            if stalled >= 200 {
                break;
            }
        } else {
            stalled = 0;
        }
        if f_new > f_prev {
            // restart momentum
            t = 1.0;
            yk = x.clone();
            continue;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let coef = (t - 1.0) / t_new;
        yk = x_new
            .iter()
            .zip(&x)
            .map(|(a, b)| a + coef * (a - b))
            .collect();
        x = x_new;
        t = t_new;
        f_prev = f_new;
    }
    (0..n).map(|i| x[i] - x[n + i]).collect()
}

// ---------------------------------------------------------------------------
// Exhaustive tree split search

/// Smallest total child SSE over every (feature, midpoint) split of `rows`
/// that leaves at least `min_bucket` samples on each side.
pub fn best_split_sse(
    x: &Array2<f64>,
    y: &[f64],
    rows: &[usize],
    min_bucket: usize,
) -> Option<f64> {
    let sse = |idx: &[usize]| {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
    };
    let mut best: Option<f64> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x[[i, f]]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, f]] < t);
            if l.len() < min_bucket || r.len() < min_bucket {
                continue;
            }
            let total = sse(&l) + sse(&r);
            best = Some(best.map_or(total, |b: f64| b.min(total)));
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Signed-rank sign enumeration

/// Two-sided exact p-value for data without zeros or ties: enumerate all
/// `2^n` sign patterns over ranks `1..n` and double the smaller tail.
pub fn wilcoxon_bruteforce(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut rank = vec![0u32; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u32 + 1;
    }
    let v: u32 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| rank[i]).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u32..(1u32 << n) {
        let s: u32 = (0..n as u32)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| b + 1)
            .sum();
        le += (s <= v) as u64;
        ge += (s >= v) as u64;
    }
    let total = (1u64 << n) as f64;
    let p = (2.0 * le.min(ge) as f64 / total).min(1.0);
    (v as f64, p)
}

// ---------------------------------------------------------------------------
// Random instances and checks shared by the oracle suites

use surrogate_fidelity::surrogates::{Node, TreeModel, TreeParams};
use surrogate_fidelity::svr::{Kernel, SvrModel, SvrParams};

pub struct SvrCase {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub params: SvrParams,
}

pub fn svr_case(rng: &mut ChaCha8Rng) -> SvrCase {
    let n = rng.random_range(2..=20);
    let d = rng.random_range(1..=4);
    let x = random_matrix(rng, n, d, -1.0, 1.0);
    let y = random_vector(rng, n, -2.0, 2.0);
    let kernel = if rng.random_bool(0.5) {
        Kernel::Rbf {
            gamma: rng.random_range(0.1..2.0),
        }
    } else {
        Kernel::Linear
    };
    SvrCase {
        x,
        y,
        params: SvrParams {
            c: rng.random_range(0.1..10.0),
            epsilon: rng.random_range(0.0..0.3),
            kernel,
            tol: 1e-9,
            max_iter: 10_000_000,
        },
    }
}

pub fn gram(x: &Array2<f64>, kernel: Kernel) -> Array2<f64> {
    let n = x.nrows();
    Array2::from_shape_fn((n, n), |(i, j)| kernel.eval(x.row(i), x.row(j)).unwrap())
}

/// Full-length `β` with zeros for non-support rows.
pub fn dense_beta(m: &SvrModel, n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n];
    for (k, &i) in m.support_indices.iter().enumerate() {
        b[i] = m.beta[k];
    }
    b
}

/// Largest violation of the box, equality and complementarity conditions.
pub fn kkt_violation(m: &SvrModel, case: &SvrCase) -> f64 {
    let n = case.y.len();
    let (c, eps) = (case.params.c, case.params.epsilon);
    let beta = dense_beta(m, n);
    let f = m.predict(case.x.view()).unwrap();
    let mut worst = beta.iter().sum::<f64>().abs();
    for i in 0..n {
        let r = case.y[i] - f[i];
        let b = beta[i];
        let v = if b.abs() > c {
            b.abs() - c
        } else if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if b >= c {
            (eps - r).max(0.0)
        } else if b <= -c {
            (r + eps).max(0.0)
        } else if b > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(v);
    }
    worst
}

pub struct TreeCase {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub params: TreeParams,
}

pub fn tree_case(rng: &mut ChaCha8Rng) -> TreeCase {
    let n = rng.random_range(2..=30);
    let d = rng.random_range(1..=3);
    // a coarse grid produces repeated values and near-ties
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(0..8) as f64 / 2.0);
    let y = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
    let min_bucket = rng.random_range(1..=3);
    TreeCase {
        x,
        y,
        params: TreeParams {
            min_split: rng.random_range(2 * min_bucket..=2 * min_bucket + 4),
            min_bucket,
            max_depth: rng.random_range(1..=6),
            cp: 0.0,
        },
    }
}

/// Training rows reaching each node.
pub fn rows_at_nodes(t: &TreeModel, x: &Array2<f64>) -> Vec<Vec<usize>> {
    let mut at = vec![Vec::new(); t.nodes.len()];
    for i in 0..x.nrows() {
        let mut id = 0;
        loop {
            at[id].push(i);
            match t.nodes[id] {
                Node::Leaf { .. } => break,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if x[[i, feature]] < threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }
    at
}

/// Largest gap between each internal node's child SSE and the exhaustive
/// optimum over the same rows.
pub fn tree_split_gap(t: &TreeModel, case: &TreeCase) -> f64 {
    let at = rows_at_nodes(t, &case.x);
    let mut worst = 0.0f64;
    for (id, node) in t.nodes.iter().enumerate() {
        if let Node::Split { children_sse, .. } = node {
            let best = best_split_sse(&case.x, &case.y, &at[id], case.params.min_bucket)
                .expect("a split node has a feasible split");
            worst = worst.max((children_sse - best).abs());
        }
    }
    worst
}

/// Signed differences with distinct magnitudes and no zeros.
pub fn tie_free_diffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut mags: Vec<f64> = (1..=n)
        .map(|k| k as f64 + rng.random_range(0.0..0.5))
        .collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        mags.swap(i, j);
    }
    mags.into_iter()
        .map(|m| if rng.random_bool(0.5) { m } else { -m })
        .collect()
}
