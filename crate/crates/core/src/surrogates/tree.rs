//! CART regression trees grown by greedy SSE minimization, plus rule
//! extraction and impurity-based feature importance.

use std::fmt;

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::error::{check_dim, Error, Result};

/// rpart-style stopping controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Nodes with fewer samples are not split.
    pub min_split: usize,
    /// Minimum samples in each child.
    pub min_bucket: usize,
    pub max_depth: usize,
    /// A split must reduce SSE by at least `cp` times the root SSE.
    pub cp: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_split: 20,
            min_bucket: 7,
            max_depth: 30,
            cp: 0.01,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_bucket < 1 {
            return Err(Error::invalid("min_bucket must be at least 1"));
        }
        if self.min_bucket > self.min_split {
            return Err(Error::invalid(format!(
                "min_bucket ({}) exceeds min_split ({})",
                self.min_bucket, self.min_split
            )));
        }
        if !(self.cp >= 0.0) {
            return Err(Error::invalid(format!(
                "cp must be nonnegative, got {}",
                self.cp
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Mean of the training targets routed here.
        value: f64,
        n_samples: usize,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] < threshold` go left.
        threshold: f64,
        left: usize,
        right: usize,
        value: f64,
        n_samples: usize,
        /// SSE of the node's own samples around their mean.
        sse: f64,
        /// Summed SSE of the two children.
        children_sse: f64,
    },
}

impl Node {
    pub fn value(&self) -> f64 {
        match *self {
            Node::Leaf { value, .. } | Node::Split { value, .. } => value,
        }
    }

    pub fn n_samples(&self) -> usize {
        match *self {
            Node::Leaf { n_samples, .. } | Node::Split { n_samples, .. } => n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<Node>,
    pub params: TreeParams,
    n_features: usize,
}

/// Sum of squared deviations from the mean, two-pass.
pub fn sse(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, s) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let m = s / n as f64;
    values.map(|v| (v - m) * (v - m)).sum()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    total: f64,
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    params: TreeParams,
    min_gain: f64,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn best_split(&self, idx: &[usize], mean: f64) -> Option<Candidate> {
        let n = idx.len();
        let mb = self.params.min_bucket;
        if n < 2 * mb {
            return None;
        }
        let mut best: Option<Candidate> = None;
        let mut order = idx.to_vec();
        let mut pre = vec![(0.0f64, 0.0f64); n + 1];
        for f in 0..self.x.ncols() {
            order.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]).then(a.cmp(&b)));
            for (k, &i) in order.iter().enumerate() {
                let c = self.y[i] - mean;
                pre[k + 1] = (pre[k].0 + c, pre[k].1 + c * c);
            }
            let (ts, tq) = pre[n];
            for k in mb..=(n - mb) {
                let lo = self.x[[order[k - 1], f]];
                let hi = self.x[[order[k], f]];
                if lo == hi {
                    continue;
                }
                let (ls, lq) = pre[k];
                let (rs, rq) = (ts - ls, tq - lq);
                let total = (lq - ls * ls / k as f64) + (rq - rs * rs / (n - k) as f64);
                let better = match &best {
                    None => true,
                    Some(b) => total < b.total - 1e-12 * (1.0 + b.total.abs()),
                };
                if better {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold <= lo {
                        threshold = hi;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        total,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let mean = idx.iter().map(|&i| self.y[i]).sum::<f64>() / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: mean,
            n_samples: n,
        });

        let first = self.y[idx[0]];
        if n < self.params.min_split
            || depth >= self.params.max_depth
            || idx.iter().all(|&i| self.y[i] == first)
        {
            return id;
        }
        let node_sse = sse(idx.iter().map(|&i| self.y[i]));
        let Some(cand) = self.best_split(&idx, mean) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[[i, cand.feature]] < cand.threshold);
        if left.is_empty() || right.is_empty() {
            return id;
        }
        let children_sse =
            sse(left.iter().map(|&i| self.y[i])) + sse(right.iter().map(|&i| self.y[i]));
        let gain = node_sse - children_sse;
        if !(gain > 0.0) || gain < self.min_gain {
            return id;
        }
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: l,
            right: r,
            value: mean,
            n_samples: n,
            sse: node_sse,
            children_sse,
        };
        id
    }
}

/// Grow a regression tree on `(x, y)`.
///
/// Candidate thresholds are midpoints between consecutive distinct values
/// of a feature. Among equally good splits the lowest feature index wins,
/// then the lowest threshold.
pub fn fit_tree(x: ArrayView2<f64>, y: ArrayView1<f64>, p: &TreeParams) -> Result<TreeModel> {
    p.validate()?;
    check_dim(x.nrows(), y.len())?;
    if x.nrows() == 0 {
        return Err(Error::invalid("cannot grow a tree on zero rows"));
    }
    let root_sse = sse(y.iter().copied());
    let mut b = Builder {
        x: x.view(),
        y: y.view(),
        params: *p,
        min_gain: p.cp * root_sse,
        nodes: Vec::new(),
    };
    b.grow((0..x.nrows()).collect(), 0);
    Ok(TreeModel {
        nodes: b.nodes,
        params: *p,
        n_features: x.ncols(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    GreaterOrEqual,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Less => "<",
            Comparison::GreaterOrEqual => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub feature: usize,
    pub name: String,
    pub op: Comparison,
    pub threshold: f64,
}

impl Condition {
    pub fn holds(&self, row: &[f64]) -> bool {
        match self.op {
            Comparison::Less => row[self.feature] < self.threshold,
            Comparison::GreaterOrEqual => row[self.feature] >= self.threshold,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.name, self.op, self.threshold)
    }
}

/// Root-to-leaf path of one leaf, as a conjunction.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub conjuncts: Vec<Condition>,
    pub prediction: f64,
}

impl Rule {
    pub fn matches(&self, row: &[f64]) -> bool {
        self.conjuncts.iter().all(|c| c.holds(row))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("IF ")?;
        if self.conjuncts.is_empty() {
            f.write_str("TRUE")?;
        }
        for (k, c) in self.conjuncts.iter().enumerate() {
            if k > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, " THEN predict = {}", self.prediction)
    }
}

/// First matching rule's prediction.
pub fn evaluate_rules(rules: &[Rule], row: &[f64]) -> Option<f64> {
    rules.iter().find(|r| r.matches(row)).map(|r| r.prediction)
}

impl TreeModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_of(&self, row: &[f64]) -> usize {
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = self.nodes[id]
        {
            id = if row[feature] < threshold {
                left
            } else {
                right
            };
        }
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        check_dim(self.n_features, row.len())?;
        Ok(self.nodes[self.leaf_of(row)].value())
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        check_dim(self.n_features, x.ncols())?;
        Ok(x.rows()
            .into_iter()
            .map(|r| self.nodes[self.leaf_of(&r.to_vec())].value())
            .collect())
    }

    /// Conditions traversed by `row` from the root to its leaf.
    pub fn decision_path(&self, row: &[f64], names: &[String]) -> Result<Rule> {
        check_dim(self.n_features, row.len())?;
        let mut conjuncts = Vec::new();
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = self.nodes[id]
        {
            let go_left = row[feature] < threshold;
            conjuncts.push(Condition {
                feature,
                name: feature_name(names, feature),
                op: if go_left {
                    Comparison::Less
                } else {
                    Comparison::GreaterOrEqual
                },
                threshold,
            });
            id = if go_left { left } else { right };
        }
        Ok(Rule {
            conjuncts,
            prediction: self.nodes[id].value(),
        })
    }
}

fn feature_name(names: &[String], j: usize) -> String {
    names.get(j).cloned().unwrap_or_else(|| format!("x{j}"))
}

/// One rule per leaf, in depth-first (left before right) order.
pub fn extract_rules(m: &TreeModel, names: &[String]) -> Vec<Rule> {
    fn walk(
        m: &TreeModel,
        names: &[String],
        id: usize,
        path: &mut Vec<Condition>,
        out: &mut Vec<Rule>,
    ) {
        match m.nodes[id] {
            Node::Leaf { value, .. } => out.push(Rule {
                conjuncts: path.clone(),
                prediction: value,
            }),
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let name = feature_name(names, feature);
                for (op, child) in [
                    (Comparison::Less, left),
                    (Comparison::GreaterOrEqual, right),
                ] {
                    path.push(Condition {
                        feature,
                        name: name.clone(),
                        op,
                        threshold,
                    });
                    walk(m, names, child, path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(m, names, 0, &mut Vec::new(), &mut out);
    out
}

/// Per-feature SSE reduction summed over splits, normalized to sum 1.
pub fn feature_importance(m: &TreeModel) -> Array1<f64> {
    let mut imp = Array1::zeros(m.n_features);
    for node in &m.nodes {
        if let Node::Split {
            feature,
            sse,
            children_sse,
            ..
        } = *node
        {
            imp[feature] += sse - children_sse;
        }
    }
    let total = imp.sum();
    if total > 0.0 {
        imp /= total;
    }
    imp
}

/// `name,value` lines for [`feature_importance`].
pub fn importance_csv(importance: &Array1<f64>, names: &[String]) -> String {
    let mut out = String::from("feature,importance\n");
    for (j, v) in importance.iter().enumerate() {
        out.push_str(&format!("{},{}\n", feature_name(names, j), v));
    }
    out
}
